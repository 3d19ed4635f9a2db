"""Category-aware sequence generation.

Couples the latent category model to a deliberately small encoder/decoder
so the constrained-decoding and fusion mechanics can be exercised end to
end on desk-scale data.  The encoder is a bag of embeddings (each token
vector plus the sentence mean); the category-aware representation attends
over the encoder states and rescales them; the decoder is a single tanh
layer fed by the previous target token, two reads of the fused memory (an
attention-pooled row and the row sum, the latter restoring full magnitude
against the shrinkage the simplex weights introduce), and a learned
position vector.  Position vectors replace recurrence, which keeps the
teacher-forced steps independent and the backward pass free of any
through-time recursion.

Training alternates generation epochs (cross-entropy through the decoder,
attention, encoder, and the latent model's mean path) with reconstruction
epochs for the latent model, mirroring the two-part objective.  All
gradients are hand-derived; finite-difference checks live in the tests.
"""

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .cbow import (
    CbowVocab,
    build_cbow_vocab,
    featurize,
    featurize_corpus,
    load_cbow_vocab,
    save_cbow_vocab,
)
from .decode import (
    DEFAULT_MAX_LEN,
    ConfigError,
    QuadrupleGrammar,
    Vocabulary,
    build_vocabulary,
    constrained_beam_decode,
    constrained_greedy_decode,
    unconstrained_greedy_decode,
)
from .lcd import (
    LcdParams,
    infer_lcd,
    init_lcd_params,
    lcd_forward,
    lcd_grad_from_rlcd,
    train_lcd,
)
from .linearize import BOS, EOS, linearize, parse_partial
from .numerics import log_softmax, softmax
from .params_io import load_arrays, save_arrays
from .schema import load_schema, save_schema


@dataclass
class Seq2SeqParams:
    emb: np.ndarray      # (|V|, dim) shared source/target embeddings
    pos: np.ndarray      # (max_pos, dim) learned position vectors
    u: np.ndarray        # (hidden, dim) previous-token projection
    t: np.ndarray        # (hidden, dim) pooled-memory projection
    g: np.ndarray        # (hidden, dim) summed-memory projection
    p: np.ndarray        # (hidden, dim) position projection
    b_h: np.ndarray      # (hidden,)
    w_out: np.ndarray    # (|V|, hidden)
    b_out: np.ndarray    # (|V|,)

    @property
    def dim(self):
        return self.u.shape[1]

    @property
    def hidden(self):
        return self.u.shape[0]

    @property
    def max_pos(self):
        return self.pos.shape[0]

    def to_dict(self):
        return {
            "emb": self.emb, "pos": self.pos, "u": self.u, "t": self.t,
            "g": self.g, "p": self.p, "b_h": self.b_h,
            "w_out": self.w_out, "b_out": self.b_out,
        }

    @classmethod
    def from_dict(cls, arrays):
        return cls(**arrays)

    def copy(self):
        return Seq2SeqParams(**{k: v.copy() for k, v in self.to_dict().items()})


def init_seq2seq_params(vocab_size, dim, max_pos=160, seed=0, init_scale=0.05,
                        hidden=None):
    hidden = dim if hidden is None else hidden
    rng = np.random.default_rng(seed)

    def w(*shape):
        return rng.uniform(-init_scale, init_scale, size=shape)

    return Seq2SeqParams(
        emb=w(vocab_size, dim),
        pos=w(max_pos, dim),
        u=w(hidden, dim),
        t=w(hidden, dim),
        g=w(hidden, dim),
        p=w(hidden, dim),
        b_h=np.zeros(hidden),
        w_out=w(vocab_size, hidden),
        b_out=np.zeros(vocab_size),
    )


def _zero_grads(params):
    return {name: np.zeros_like(arr) for name, arr in params.to_dict().items()}


def toy_encode(params, vocab, tokens):
    """Contextualized source states: each token embedding plus the sentence
    mean.  Unknown tokens are skipped; an all-unknown sentence yields one
    zero state so attention stays well defined.  Returns (h, kept_indices).
    """
    idxs = [vocab.index[t] for t in tokens if t in vocab]
    if not idxs:
        return np.zeros((1, params.dim)), []
    rows = params.emb[idxs]
    return rows + rows.mean(axis=0), idxs


def encode_backward(grad_emb, idxs, grad_h):
    if not idxs:
        return
    mean_part = grad_h.sum(axis=0) / len(idxs)
    for j, p in enumerate(idxs):
        grad_emb[p] += grad_h[j] + mean_part


def category_text_attention(r_lcd, h):
    """Scaled dot-product attention of the category representation over the
    encoder states, then a per-state rescale: v_j = a_j * h_j."""
    scale = 1.0 / np.sqrt(h.shape[1])
    att = softmax(h @ r_lcd * scale)
    return att[:, None] * h, att


def category_text_attention_backward(r_lcd, h, att, grad_v):
    scale = 1.0 / np.sqrt(h.shape[1])
    g_att = (grad_v * h).sum(axis=1)
    grad_h = att[:, None] * grad_v
    g_e = att * (g_att - float(att @ g_att))
    grad_r_lcd = (h.T @ g_e) * scale
    grad_h += np.outer(g_e, r_lcd) * scale
    return grad_r_lcd, grad_h


@dataclass
class FusedMemory:
    """Source memory handed to the decoder.

    The simplex attention weights scale the fused rows by roughly 1/N, so
    the same decoder would see wildly different magnitudes depending on how
    the memory was produced.  row_gain records the factor that restores
    full row magnitude; the decoder applies it uniformly to its reads.
    """

    v: np.ndarray
    row_gain: float = 1.0


@dataclass
class _StepTrace:
    prev_idx: int
    pos_idx: int
    q: np.ndarray
    att: np.ndarray
    pooled: np.ndarray
    summed: np.ndarray
    hidden: np.ndarray
    scores: np.ndarray


def _decoder_step(params, prev_idx, pos_idx, memory):
    v = memory.v
    read = memory.row_gain / v.shape[0]
    pi = min(pos_idx, params.max_pos - 1)
    prev = params.emb[prev_idx]
    q = prev + params.pos[pi]
    # row_gain keeps the addressing temperature and the two reads at the
    # same scale whichever fusion arm produced the memory
    scale = memory.row_gain / np.sqrt(params.dim)
    att = softmax(v @ q * scale)
    pooled = att @ v * read
    summed = v.sum(axis=0) * read
    hidden = np.tanh(
        params.u @ prev + params.t @ pooled + params.g @ summed
        + params.p @ params.pos[pi] + params.b_h
    )
    scores = params.w_out @ hidden + params.b_out
    return _StepTrace(
        prev_idx=prev_idx, pos_idx=pi, q=q, att=att, pooled=pooled, summed=summed,
        hidden=hidden, scores=scores,
    )


def _decoder_step_backward(params, trace, memory, g_scores, grads, grad_v):
    v = memory.v
    read = memory.row_gain / v.shape[0]
    grads["w_out"] += np.outer(g_scores, trace.hidden)
    grads["b_out"] += g_scores
    g_hidden = params.w_out.T @ g_scores
    g_pre = g_hidden * (1.0 - trace.hidden * trace.hidden)

    prev = params.emb[trace.prev_idx]
    grads["u"] += np.outer(g_pre, prev)
    grads["t"] += np.outer(g_pre, trace.pooled)
    grads["g"] += np.outer(g_pre, trace.summed)
    grads["p"] += np.outer(g_pre, params.pos[trace.pos_idx])
    grads["b_h"] += g_pre
    grads["pos"][trace.pos_idx] += params.p.T @ g_pre

    g_prev = params.u.T @ g_pre
    g_pooled = params.t.T @ g_pre
    grad_v += (params.g.T @ g_pre) * read

    g_att = (v @ g_pooled) * read
    grad_v += np.outer(trace.att, g_pooled) * read
    g_s = trace.att * (g_att - float(trace.att @ g_att))
    scale = memory.row_gain / np.sqrt(params.dim)
    grad_v += np.outer(g_s, trace.q) * scale
    g_q = (v.T @ g_s) * scale

    g_prev += g_q
    grads["pos"][trace.pos_idx] += g_q
    grads["emb"][trace.prev_idx] += g_prev


def sequence_loss(params, vocab, memory, target_tokens):
    """Teacher-forced cross-entropy of the target sequence given the fused
    memory.  Returns (loss, step traces)."""
    missing = sorted({t for t in target_tokens if t not in vocab})
    if missing:
        raise ConfigError(f"target tokens missing from vocabulary: {missing}")
    prev_idx = vocab.index[BOS]
    loss = 0.0
    traces = []
    for i, tok in enumerate(target_tokens):
        trace = _decoder_step(params, prev_idx, i, memory)
        loss -= float(log_softmax(trace.scores)[vocab.index[tok]])
        traces.append(trace)
        prev_idx = vocab.index[tok]
    return loss, traces


def sequence_grads(params, vocab, memory, target_tokens):
    """Loss plus analytic gradients for all decoder-side parameters and the
    memory rows."""
    loss, traces = sequence_loss(params, vocab, memory, target_tokens)
    grads = _zero_grads(params)
    grad_v = np.zeros_like(memory.v)
    for trace, tok in zip(traces, target_tokens):
        g_scores = softmax(trace.scores)
        g_scores[vocab.index[tok]] -= 1.0
        _decoder_step_backward(params, trace, memory, g_scores, grads, grad_v)
    return loss, grads, grad_v


class ModelScorer:
    """Scorer protocol adapter: memory is the fused source matrix."""

    def __init__(self, params, vocab):
        self.params = params
        self.vocab = vocab

    def next_scores(self, history, memory):
        prev_idx = self.vocab.index[history[-1]]
        trace = _decoder_step(self.params, prev_idx, len(history) - 1, memory)
        return trace.scores


def prepare_memory(seq, lcd_params, vocab, cbow_vocab, source_tokens, ablate_lcd=False,
                   rescale_v=False):
    """Encode a source sentence and fuse it with its inferred category
    representation.  With ablate_lcd the memory rows are exactly the raw
    encoder states.  rescale_v multiplies the fused states by the source
    length instead of leaving the restore factor to the decoder.  Either
    way row_gain tells the decoder what scale the rows arrive at.
    """
    h, _ = toy_encode(seq, vocab, source_tokens)
    if ablate_lcd:
        return FusedMemory(h)
    x = featurize(source_tokens, cbow_vocab)
    r_lcd = infer_lcd(lcd_params, x).r_lcd
    v, _ = category_text_attention(r_lcd, h)
    if rescale_v:
        return FusedMemory(v * h.shape[0])
    return FusedMemory(v, row_gain=float(h.shape[0]))


def gen_sample_loss(seq, lcd_params, vocab, cbow_vocab, source_tokens, target_tokens,
                    ablate_lcd=False, rescale_v=False):
    """Forward-only generation loss for one sample (used by the gradient
    checks)."""
    memory = prepare_memory(seq, lcd_params, vocab, cbow_vocab, source_tokens,
                            ablate_lcd=ablate_lcd, rescale_v=rescale_v)
    loss, _ = sequence_loss(seq, vocab, memory, target_tokens)
    return loss


def gen_sample_grads(seq, lcd_params, vocab, cbow_vocab, source_tokens, target_tokens,
                     ablate_lcd=False, rescale_v=False):
    """Loss and gradients for one teacher-forced sample.

    Returns (loss, seq grads, lcd grads or None).  The latent path runs at
    eps = 0 and its gradient reaches the encoder nets and the category
    embedding table but never the reconstruction decoder.
    """
    h, idxs = toy_encode(seq, vocab, source_tokens)
    if ablate_lcd:
        loss, grads, grad_v = sequence_grads(seq, vocab, FusedMemory(h), target_tokens)
        encode_backward(grads["emb"], idxs, grad_v)
        return loss, grads, None
    x = featurize(source_tokens, cbow_vocab)
    trace = lcd_forward(lcd_params, x, eps=None)
    v, att = category_text_attention(trace.r_lcd, h)
    n = h.shape[0]
    if rescale_v:
        memory = FusedMemory(v * n)
    else:
        memory = FusedMemory(v, row_gain=float(n))
    loss, grads, grad_v = sequence_grads(seq, vocab, memory, target_tokens)
    if rescale_v:
        grad_v = grad_v * n
    grad_r_lcd, grad_h = category_text_attention_backward(trace.r_lcd, h, att, grad_v)
    encode_backward(grads["emb"], idxs, grad_h)
    lcd_grads = lcd_grad_from_rlcd(lcd_params, trace, grad_r_lcd)
    return loss, grads, lcd_grads


@dataclass
class FusionConfig:
    """Knobs for the full training pipeline.  The default schedule is the
    reconstruction pretrain (lcd_pretrain_epochs) followed by rounds of
    gen_epochs generation SGD and lcd_epochs reconstruction SGD."""

    dim: int = 32
    hidden: int = 256
    dec_hidden: int = 128
    max_pos: int = 160
    lcd_pretrain_epochs: int = 10
    gen_epochs: int = 20
    lcd_epochs: int = 10
    rounds: int = 3
    lr_gen: float = 0.07
    lr_lcd: float = 0.02
    lcd_batch_size: int = 5
    init_scale: float = 0.05
    min_count: int = 1
    seed: int = 0
    ablate_lcd: bool = False
    rescale_v: bool = False


@dataclass
class TrainedModel:
    schema: object
    vocab: Vocabulary
    cbow_vocab: CbowVocab
    seq: Seq2SeqParams
    lcd: LcdParams
    config: FusionConfig


@dataclass
class TrainHistory:
    gen: list = field(default_factory=list)
    lcd: list = field(default_factory=list)
    diverged: bool = False


def train_seq2seq(seq, lcd_params, vocab, cbow_vocab, samples, config, rng=None):
    """Alternating schedule on already initialized parameters: rounds of
    gen_epochs teacher-forced generation SGD (gradients reach the decoder,
    the encoder, and the latent model's mean path) followed by lcd_epochs
    of reconstruction SGD.  Zero rounds leaves both parameter sets
    untouched.  Returns (seq, lcd_params, history); on divergence the last
    finite-epoch checkpoint is returned with history.diverged set."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    seq = seq.copy()
    lcd_params = lcd_params.copy()
    history = TrainHistory()
    samples = list(samples)
    targets = [linearize(s.gold) + [EOS] for s in samples]
    sources = [list(s.text) for s in samples]
    xs = featurize_corpus(sources, cbow_vocab)
    checkpoint = (seq.copy(), lcd_params.copy())

    for _ in range(config.rounds):
        for _ in range(config.gen_epochs):
            order = rng.permutation(len(samples))
            losses = []
            for i in order:
                loss, seq_grads, lcd_grads = gen_sample_grads(
                    seq, lcd_params, vocab, cbow_vocab, sources[i], targets[i],
                    ablate_lcd=config.ablate_lcd, rescale_v=config.rescale_v,
                )
                if not np.isfinite(loss):
                    seq, lcd_params = checkpoint
                    history.diverged = True
                    return seq, lcd_params, history
                arrays = seq.to_dict()
                for name, arr in arrays.items():
                    arr -= config.lr_gen * seq_grads[name]
                if lcd_grads is not None:
                    lcd_arrays = lcd_params.to_dict()
                    for name, grad in lcd_grads.items():
                        lcd_arrays[name] -= config.lr_gen * grad
                losses.append(loss)
            history.gen.append(float(np.mean(losses)))
            checkpoint = (seq.copy(), lcd_params.copy())
        if config.lcd_epochs > 0 and not config.ablate_lcd:
            lcd_seed = int(rng.integers(0, 2**31 - 1))
            result = train_lcd(
                lcd_params, xs, epochs=config.lcd_epochs, lr=config.lr_lcd,
                batch_size=config.lcd_batch_size, seed=lcd_seed,
            )
            lcd_params = result.params
            history.lcd.extend(result.history)
            if result.diverged:
                history.diverged = True
                return seq, lcd_params, history
            checkpoint = (seq.copy(), lcd_params.copy())
    return seq, lcd_params, history


def train_model(samples, schema, config=None, stopwords=(), sentiment_words=()):
    """Full pipeline: build vocabularies, initialize parameters, pretrain
    the latent model on reconstruction alone, then run the alternating
    generation/reconstruction schedule.  Deterministic given config.seed."""
    config = config or FusionConfig()
    samples = list(samples)
    if not samples:
        raise ValueError("no training samples")
    vocab = build_vocabulary(schema, samples)
    cbow_vocab = build_cbow_vocab(
        (s.text for s in samples), stopwords, sentiment_words, min_count=config.min_count
    )
    seq = init_seq2seq_params(
        len(vocab), config.dim, max_pos=config.max_pos, seed=config.seed,
        init_scale=config.init_scale, hidden=config.dec_hidden,
    )
    lcd_params = init_lcd_params(
        len(cbow_vocab), schema.k, config.dim, hidden=config.hidden, seed=config.seed + 1,
        init_scale=config.init_scale,
    )
    history = TrainHistory()
    rng = np.random.default_rng(config.seed)

    if config.lcd_pretrain_epochs > 0 and not config.ablate_lcd:
        xs = featurize_corpus((s.text for s in samples), cbow_vocab)
        pre_seed = int(rng.integers(0, 2**31 - 1))
        result = train_lcd(
            lcd_params, xs, epochs=config.lcd_pretrain_epochs, lr=config.lr_lcd,
            batch_size=config.lcd_batch_size, seed=pre_seed,
        )
        lcd_params = result.params
        history.lcd.extend(result.history)
        history.diverged = result.diverged

    if not history.diverged:
        seq, lcd_params, tail = train_seq2seq(
            seq, lcd_params, vocab, cbow_vocab, samples, config, rng=rng
        )
        history.gen.extend(tail.gen)
        history.lcd.extend(tail.lcd)
        history.diverged = tail.diverged

    model = TrainedModel(
        schema=schema, vocab=vocab, cbow_vocab=cbow_vocab, seq=seq, lcd=lcd_params,
        config=config,
    )
    return model, history


@dataclass
class Prediction:
    sample: object
    tokens: list
    truncated: bool
    quads: tuple
    parse_error: object = None


def decode_samples(model, samples, max_len=DEFAULT_MAX_LEN, beam_width=1,
                   constrained=True, copy_restriction=False):
    """Decode every sample and parse the outputs.  Constrained decoding
    always parses; the unconstrained baseline may not, in which case the
    quads recovered before the error are kept and the error recorded."""
    grammar = QuadrupleGrammar(model.schema, model.vocab, copy_restriction=copy_restriction)
    scorer = ModelScorer(model.seq, model.vocab)
    out = []
    for sample in samples:
        memory = prepare_memory(
            model.seq, model.lcd, model.vocab, model.cbow_vocab, sample.text,
            ablate_lcd=model.config.ablate_lcd, rescale_v=model.config.rescale_v,
        )
        if not constrained:
            result = unconstrained_greedy_decode(scorer, memory, max_len=max_len)
        elif beam_width > 1:
            result = constrained_beam_decode(
                grammar, scorer, memory, beam_width=beam_width, max_len=max_len,
                source_tokens=sample.text,
            )
        else:
            result = constrained_greedy_decode(
                grammar, scorer, memory, max_len=max_len, source_tokens=sample.text
            )
        quads, err = parse_partial(result.tokens, model.schema)
        out.append(
            Prediction(
                sample=sample, tokens=result.tokens, truncated=result.truncated,
                quads=tuple(quads), parse_error=err,
            )
        )
    return out


_MODEL_PARAMS = "params.bin"
_MODEL_VOCAB = "vocab.txt"
_MODEL_CBOW = "cbow_vocab.txt"
_MODEL_SCHEMA = "schema.txt"
_MODEL_META = "model.ini"


def save_model(model, dir_path):
    """Write a model directory: binary parameters, both vocabularies, the
    schema, and an INI with the config."""
    os.makedirs(dir_path, exist_ok=True)
    arrays = {}
    for name, arr in model.seq.to_dict().items():
        arrays[f"seq.{name}"] = arr
    for name, arr in model.lcd.to_dict().items():
        arrays[f"lcd.{name}"] = arr
    save_arrays(arrays, os.path.join(dir_path, _MODEL_PARAMS))
    with open(os.path.join(dir_path, _MODEL_VOCAB), "w", encoding="utf-8") as fh:
        for tok in model.vocab.tokens:
            fh.write(tok + "\n")
    save_cbow_vocab(model.cbow_vocab, os.path.join(dir_path, _MODEL_CBOW))
    save_schema(model.schema, os.path.join(dir_path, _MODEL_SCHEMA))
    meta = configparser.ConfigParser()
    meta["model"] = {
        name: str(getattr(model.config, name))
        for name in FusionConfig.__dataclass_fields__
    }
    with open(os.path.join(dir_path, _MODEL_META), "w", encoding="utf-8") as fh:
        meta.write(fh)


def load_model(dir_path):
    meta = configparser.ConfigParser()
    with open(os.path.join(dir_path, _MODEL_META), encoding="utf-8") as fh:
        meta.read_file(fh)
    section = meta["model"]
    defaults = FusionConfig()
    kwargs = {}
    for name in FusionConfig.__dataclass_fields__:
        raw = section[name]
        kind = type(getattr(defaults, name))
        if kind is bool:
            kwargs[name] = raw.lower() in ("1", "true", "yes", "on")
        else:
            kwargs[name] = kind(raw)
    config = FusionConfig(**kwargs)

    arrays = load_arrays(os.path.join(dir_path, _MODEL_PARAMS))
    seq_arrays = {k[4:]: v for k, v in arrays.items() if k.startswith("seq.")}
    lcd_arrays = {k[4:]: v for k, v in arrays.items() if k.startswith("lcd.")}
    with open(os.path.join(dir_path, _MODEL_VOCAB), encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
    return TrainedModel(
        schema=load_schema(os.path.join(dir_path, _MODEL_SCHEMA)),
        vocab=Vocabulary(tokens),
        cbow_vocab=load_cbow_vocab(os.path.join(dir_path, _MODEL_CBOW)),
        seq=Seq2SeqParams.from_dict(seq_arrays),
        lcd=LcdParams.from_dict(lcd_arrays),
        config=config,
    )


def gen_grad_check(seq, lcd_params, vocab, cbow_vocab, source_tokens, target_tokens,
                   h=1e-5, ablate_lcd=False, rescale_v=False):
    """Max relative error of the analytic generation-loss gradients against
    central differences, over every decoder-side parameter and (unless
    ablated) every latent-model parameter reachable from the loss."""
    loss0, seq_grads, lcd_grads = gen_sample_grads(
        seq, lcd_params, vocab, cbow_vocab, source_tokens, target_tokens,
        ablate_lcd=ablate_lcd, rescale_v=rescale_v,
    )
    del loss0
    work_seq = seq.copy()
    work_lcd = lcd_params.copy()

    def loss_fn():
        return gen_sample_loss(
            work_seq, work_lcd, vocab, cbow_vocab, source_tokens, target_tokens,
            ablate_lcd=ablate_lcd, rescale_v=rescale_v,
        )

    worst = 0.0

    def sweep(arrays, analytic):
        nonlocal worst
        for name, arr in arrays.items():
            expected = analytic.get(name)
            for idx in np.ndindex(arr.shape):
                keep = arr[idx]
                arr[idx] = keep + h
                up = loss_fn()
                arr[idx] = keep - h
                down = loss_fn()
                arr[idx] = keep
                numeric = (up - down) / (2.0 * h)
                a = 0.0 if expected is None else expected[idx]
                err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
                worst = max(worst, err)

    sweep(work_seq.to_dict(), seq_grads)
    if not ablate_lcd:
        sweep(work_lcd.to_dict(), lcd_grads)
    return worst
