"""Category bag-of-words features.

Builds the filtered word inventory the latent category model consumes and
turns token sequences into raw count vectors over it.  Filtering drops
stopwords, sentiment-bearing words, single characters, and pure numbers;
what survives is mostly the content nouns whose co-occurrence signals the
category.
"""

import numpy as np


class CbowVocab:
    """Ordered word inventory for count featurization."""

    def __init__(self, words):
        self.words = tuple(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in bag-of-words vocabulary")
        if not self.words:
            raise ValueError("bag-of-words vocabulary is empty")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index


def _meaningless(word):
    return len(word) <= 1 or word.isdigit()


def build_cbow_vocab(texts, stopwords=(), sentiment_words=(), min_count=1):
    """Count words over tokenized texts and keep the informative ones,
    lexicographically ordered.  Raises ValueError if nothing survives."""
    stop = {w.lower() for w in stopwords}
    senti = {w.lower() for w in sentiment_words}
    counts = {}
    for tokens in texts:
        for raw in tokens:
            w = raw.lower()
            if w in stop or w in senti or _meaningless(w):
                continue
            counts[w] = counts.get(w, 0) + 1
    kept = sorted(w for w, n in counts.items() if n >= min_count)
    return CbowVocab(kept)


def featurize(tokens, vocab):
    """Raw count vector over the vocabulary; out-of-vocabulary tokens are
    ignored, so an all-unknown text maps to the zero vector."""
    x = np.zeros(len(vocab))
    for raw in tokens:
        i = vocab.index.get(raw.lower())
        if i is not None:
            x[i] += 1.0
    return x


def featurize_corpus(texts, vocab):
    rows = [featurize(tokens, vocab) for tokens in texts]
    if not rows:
        return np.zeros((0, len(vocab)))
    return np.stack(rows)


def save_cbow_vocab(vocab, path):
    with open(path, "w", encoding="utf-8") as fh:
        for w in vocab.words:
            fh.write(w + "\n")


def load_cbow_vocab(path):
    with open(path, encoding="utf-8") as fh:
        words = [line.strip() for line in fh if line.strip()]
    return CbowVocab(words)


def load_wordlist(path):
    """One word per line; blank lines and # comments skipped."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            w = line.strip()
            if w and not w.startswith("#"):
                words.append(w.lower())
    return frozenset(words)
