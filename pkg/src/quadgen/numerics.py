"""Small numerically-stable helpers shared across modules."""

import numpy as np


def softmax(x):
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / np.sum(e)


def logsumexp(x):
    x = np.asarray(x, dtype=np.float64)
    m = np.max(x)
    return m + np.log(np.sum(np.exp(x - m)))


def log_softmax(x):
    x = np.asarray(x, dtype=np.float64)
    return x - logsumexp(x)
