"""Latent category distribution model.

A small variational autoencoder over bag-of-words count vectors.  Two
tanh feed-forward encoders produce the mean and log standard deviation of
a K-dimensional Gaussian; a reparameterized draw is pushed through a
softmax to give the latent category distribution Z on the simplex.  Z
mixes the rows of a category embedding table into the category-aware
representation R_lcd, which a bias-free linear decoder expands back to a
distribution over the vocabulary.  Loss is the negative ELBO: count-
weighted cross-entropy reconstruction plus the analytic Gaussian KL.

All gradients are hand-derived and checked against central finite
differences in the test suite.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import log_softmax, softmax
from .params_io import load_arrays, save_arrays

DEFAULT_HIDDEN = 256
DEFAULT_INIT_SCALE = 0.05


@dataclass
class LcdParams:
    enc_mu_w1: np.ndarray
    enc_mu_b1: np.ndarray
    enc_mu_w2: np.ndarray
    enc_mu_b2: np.ndarray
    enc_sig_w1: np.ndarray
    enc_sig_b1: np.ndarray
    enc_sig_w2: np.ndarray
    enc_sig_b2: np.ndarray
    w_lcd: np.ndarray
    w_r: np.ndarray

    @property
    def l(self):
        return self.w_r.shape[0]

    @property
    def k(self):
        return self.w_lcd.shape[0]

    @property
    def dim(self):
        return self.w_lcd.shape[1]

    @property
    def hidden(self):
        return self.enc_mu_w1.shape[0]

    def to_dict(self):
        return {
            "enc_mu_w1": self.enc_mu_w1,
            "enc_mu_b1": self.enc_mu_b1,
            "enc_mu_w2": self.enc_mu_w2,
            "enc_mu_b2": self.enc_mu_b2,
            "enc_sig_w1": self.enc_sig_w1,
            "enc_sig_b1": self.enc_sig_b1,
            "enc_sig_w2": self.enc_sig_w2,
            "enc_sig_b2": self.enc_sig_b2,
            "w_lcd": self.w_lcd,
            "w_r": self.w_r,
        }

    @classmethod
    def from_dict(cls, arrays):
        return cls(**arrays)

    def copy(self):
        return LcdParams(**{k: v.copy() for k, v in self.to_dict().items()})


def init_lcd_params(l, k, dim, hidden=DEFAULT_HIDDEN, seed=0, init_scale=DEFAULT_INIT_SCALE):
    """Uniform(-init_scale, init_scale) weights, zero biases."""
    if min(l, k, dim, hidden) < 1:
        raise ValueError("all dimensions must be positive")
    rng = np.random.default_rng(seed)

    def w(*shape):
        return rng.uniform(-init_scale, init_scale, size=shape)

    return LcdParams(
        enc_mu_w1=w(hidden, l),
        enc_mu_b1=np.zeros(hidden),
        enc_mu_w2=w(k, hidden),
        enc_mu_b2=np.zeros(k),
        enc_sig_w1=w(hidden, l),
        enc_sig_b1=np.zeros(hidden),
        enc_sig_w2=w(k, hidden),
        enc_sig_b2=np.zeros(k),
        w_lcd=w(k, dim),
        w_r=w(l, dim),
    )


@dataclass
class LcdTrace:
    """Every intermediate of one forward pass, kept for backprop."""

    x: np.ndarray
    eps: np.ndarray
    h_mu: np.ndarray
    mu: np.ndarray
    h_sig: np.ndarray
    log_sigma: np.ndarray
    sigma: np.ndarray
    z_pre: np.ndarray
    z: np.ndarray
    r_lcd: np.ndarray
    r: np.ndarray
    x_hat: np.ndarray
    recon: float
    kl: float

    @property
    def neg_elbo(self):
        return self.recon + self.kl


def kl_gaussian(mu, log_sigma):
    """KL(N(mu, diag sigma^2) || N(0, I)) in closed form."""
    sigma2 = np.exp(2.0 * log_sigma)
    return 0.5 * float(np.sum(mu * mu + sigma2 - 1.0 - 2.0 * log_sigma))


def _tanh_net_forward(w1, b1, w2, b2, x):
    h = np.tanh(w1 @ x + b1)
    return h, w2 @ h + b2


def lcd_forward(params, x, eps=None):
    """One forward pass.  eps=None means the deterministic posterior mean
    (inference mode, equivalent to eps = 0)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.l,):
        raise ValueError(f"expected feature vector of length {params.l}, got {x.shape}")
    if eps is None:
        eps = np.zeros(params.k)
    else:
        eps = np.asarray(eps, dtype=np.float64)

    h_mu, mu = _tanh_net_forward(
        params.enc_mu_w1, params.enc_mu_b1, params.enc_mu_w2, params.enc_mu_b2, x
    )
    h_sig, log_sigma = _tanh_net_forward(
        params.enc_sig_w1, params.enc_sig_b1, params.enc_sig_w2, params.enc_sig_b2, x
    )
    sigma = np.exp(log_sigma)
    z_pre = mu + sigma * eps
    z = softmax(z_pre)
    r_lcd = params.w_lcd.T @ z
    r = params.w_r @ r_lcd
    log_x_hat = log_softmax(r)
    recon = -float(x @ log_x_hat)
    kl = kl_gaussian(mu, log_sigma)
    return LcdTrace(
        x=x, eps=eps, h_mu=h_mu, mu=mu, h_sig=h_sig, log_sigma=log_sigma, sigma=sigma,
        z_pre=z_pre, z=z, r_lcd=r_lcd, r=r, x_hat=np.exp(log_x_hat), recon=recon, kl=kl,
    )


def lcd_loss(params, x, eps=None):
    trace = lcd_forward(params, x, eps)
    return trace.neg_elbo, trace


def infer_lcd(params, x):
    """Deterministic trace at eps = 0; .z is the category distribution and
    .r_lcd the category-aware representation."""
    return lcd_forward(params, x, eps=None)


def infer_lcd_batch(params, xs):
    zs, r_lcds = [], []
    for x in xs:
        trace = infer_lcd(params, x)
        zs.append(trace.z)
        r_lcds.append(trace.r_lcd)
    return np.array(zs), np.array(r_lcds)


def _tanh_net_backward(w2, h, x, g_out):
    grad_h = w2.T @ g_out
    grad_a = grad_h * (1.0 - h * h)
    return {
        "w2": np.outer(g_out, h),
        "b2": g_out.copy(),
        "w1": np.outer(grad_a, x),
        "b1": grad_a,
    }


def _grads_through_z(params, trace, grad_r_lcd, grad_mu_extra, grad_logsig_extra):
    """Backprop from d(loss)/d(r_lcd) into w_lcd and both encoder nets,
    adding any direct mu / log_sigma gradient terms (the KL part)."""
    grad_w_lcd = np.outer(trace.z, grad_r_lcd)
    grad_z = params.w_lcd @ grad_r_lcd
    grad_z_pre = trace.z * (grad_z - float(trace.z @ grad_z))
    grad_mu = grad_z_pre + grad_mu_extra
    grad_logsig = grad_z_pre * trace.eps * trace.sigma + grad_logsig_extra
    mu_net = _tanh_net_backward(params.enc_mu_w2, trace.h_mu, trace.x, grad_mu)
    sig_net = _tanh_net_backward(params.enc_sig_w2, trace.h_sig, trace.x, grad_logsig)
    return {
        "enc_mu_w1": mu_net["w1"],
        "enc_mu_b1": mu_net["b1"],
        "enc_mu_w2": mu_net["w2"],
        "enc_mu_b2": mu_net["b2"],
        "enc_sig_w1": sig_net["w1"],
        "enc_sig_b1": sig_net["b1"],
        "enc_sig_w2": sig_net["w2"],
        "enc_sig_b2": sig_net["b2"],
        "w_lcd": grad_w_lcd,
    }


def lcd_grad(params, x, eps=None):
    """Analytic gradient of the negative ELBO for every parameter.
    Returns (grads dict keyed like LcdParams.to_dict(), trace)."""
    trace = lcd_forward(params, x, eps)
    # softmax cross-entropy with count weights: d(recon)/d(r)
    g_r = float(np.sum(trace.x)) * trace.x_hat - trace.x
    grad_w_r = np.outer(g_r, trace.r_lcd)
    grad_r_lcd = params.w_r.T @ g_r
    sigma2 = trace.sigma * trace.sigma
    grads = _grads_through_z(
        params, trace, grad_r_lcd,
        grad_mu_extra=trace.mu,
        grad_logsig_extra=sigma2 - 1.0,
    )
    grads["w_r"] = grad_w_r
    return grads, trace


def lcd_grad_from_rlcd(params, trace, grad_r_lcd):
    """Gradients of a downstream loss with respect to the encoder and the
    category embedding table, given d(loss)/d(r_lcd).  Used when the
    generation objective flows back through the fused representation; the
    reconstruction decoder w_r is untouched by that path."""
    zeros_k = np.zeros(params.k)
    return _grads_through_z(
        params, trace, grad_r_lcd, grad_mu_extra=zeros_k, grad_logsig_extra=zeros_k
    )


def lcd_grad_check(params, x, eps, h=1e-5):
    """Max relative error between analytic and central-difference gradients
    over every parameter entry."""
    analytic, _ = lcd_grad(params, x, eps)
    work = params.copy()
    arrays = work.to_dict()
    worst = 0.0
    for name, arr in arrays.items():
        for idx in np.ndindex(arr.shape):
            keep = arr[idx]
            arr[idx] = keep + h
            up, _ = lcd_loss(work, x, eps)
            arr[idx] = keep - h
            down, _ = lcd_loss(work, x, eps)
            arr[idx] = keep
            numeric = (up - down) / (2.0 * h)
            a = analytic[name][idx]
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            worst = max(worst, err)
    return worst


@dataclass
class LcdTrainResult:
    params: LcdParams
    history: list
    diverged: bool = False


def train_lcd(params, xs, epochs, lr=0.05, batch_size=1, seed=0, shuffle=True):
    """Plain SGD on the negative ELBO, batch-mean gradients.

    Deterministic given the seed: samples are visited in a seeded shuffle
    and the noise draws follow that order, so the same hyperparameters
    always reproduce the same parameters.  If the loss goes non-finite the
    run aborts and the parameters from the last finite epoch are returned
    with diverged=True.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("training matrix must be 2-d and non-empty")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = np.random.default_rng(seed)
    params = params.copy()
    checkpoint = params.copy()
    history = []
    for _ in range(epochs):
        order = rng.permutation(len(xs)) if shuffle else np.arange(len(xs))
        losses = []
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            acc = None
            for i in batch:
                eps = rng.standard_normal(params.k)
                grads, trace = lcd_grad(params, xs[i], eps)
                if not np.isfinite(trace.neg_elbo):
                    return LcdTrainResult(params=checkpoint, history=history, diverged=True)
                if acc is None:
                    acc = grads
                else:
                    for name in acc:
                        acc[name] += grads[name]
                losses.append(trace.neg_elbo)
            arrays = params.to_dict()
            for name, arr in arrays.items():
                arr -= lr * acc[name] / len(batch)
        mean_loss = float(np.mean(losses))
        if not np.isfinite(mean_loss):
            return LcdTrainResult(params=checkpoint, history=history, diverged=True)
        history.append(mean_loss)
        checkpoint = params.copy()
    return LcdTrainResult(params=params, history=history, diverged=False)


def save_lcd_params(params, path):
    save_arrays(params.to_dict(), path)


def load_lcd_params(path):
    arrays = load_arrays(path)
    expected = set(LcdParams.__dataclass_fields__)
    if set(arrays) != expected:
        raise ValueError(f"checkpoint arrays {sorted(arrays)} do not match {sorted(expected)}")
    return LcdParams.from_dict(arrays)
