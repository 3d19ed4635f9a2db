"""Shared fixtures: the bundled mini-dataset, word lists, and a factory
for small randomized schemas used by the grammar-oracle tests."""

import itertools

import numpy as np
import pytest
from hypothesis import settings

from quadgen import (
    build_cbow_vocab,
    featurize_corpus,
    ingest_acos_file,
    infer_lcd_batch,
    init_lcd_params,
    lcd_forward,
    load_schema,
    load_wordlist,
    make_schema,
    train_lcd,
)
from quadgen.resources import data_path

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def mini_schema():
    return load_schema(data_path("mini.schema"))


def _ingest_clean(name, schema):
    result = ingest_acos_file(data_path(name), schema=schema)
    assert not result.problems, result.problems
    return result.samples


@pytest.fixture(scope="session")
def mini_train(mini_schema):
    return _ingest_clean("mini_train.tsv", mini_schema)


@pytest.fixture(scope="session")
def mini_dev(mini_schema):
    return _ingest_clean("mini_dev.tsv", mini_schema)


@pytest.fixture(scope="session")
def mini_test(mini_schema):
    return _ingest_clean("mini_test.tsv", mini_schema)


@pytest.fixture(scope="session")
def stop_words():
    return load_wordlist(data_path("stopwords.txt"))


@pytest.fixture(scope="session")
def senti_words():
    return load_wordlist(data_path("sentiment_words.txt"))


def random_small_schema(rng):
    """A tiny random schema for exhaustive grammar checks: 1-2 categories,
    1-2 subcategories each, 2-3 sentiments.  Occasionally a subcategory
    name collides with a category name, which the grammar must tolerate."""
    n_cats = int(rng.integers(1, 3))
    cats = [f"C{chr(65 + i)}" for i in range(n_cats)]
    subs = {}
    for i, c in enumerate(cats):
        n_subs = int(rng.integers(1, 3))
        children = [f"X{chr(65 + i)}{j}" for j in range(n_subs)]
        if n_subs > 1 and rng.random() < 0.3:
            children[-1] = cats[0]
        subs[c] = children
    sentiments = ["NEG", "POS"] if rng.random() < 0.5 else ["NEG", "NEU", "POS"]
    return make_schema(cats, subs, sentiments)


@pytest.fixture
def schema_rng():
    return np.random.default_rng(20260817)


def _mean_neg_elbo(params, xs):
    return float(np.mean([lcd_forward(params, x, eps=None).neg_elbo for x in xs]))


@pytest.fixture(scope="session")
def pinned_lcd_run(mini_schema, mini_train, stop_words, senti_words):
    """One latent-category training run on the bundled corpus, shared by the
    unit tests and the acceptance suite.  Everything downstream is pinned:
    same vocabulary, same seeds, same schedule."""
    vocab = build_cbow_vocab(
        [s.text for s in mini_train],
        stopwords=stop_words,
        sentiment_words=senti_words,
        min_count=1,
    )
    xs = featurize_corpus([s.text for s in mini_train], vocab)
    k = len(mini_schema.categories)
    params0 = init_lcd_params(l=len(vocab), k=k, dim=256, hidden=256, seed=9)
    before = _mean_neg_elbo(params0, xs)
    result = train_lcd(params0, xs, epochs=200, lr=0.3, batch_size=25, seed=9)
    after = _mean_neg_elbo(result.params, xs)

    # purity: majority gold category per sample vs argmax of Z, scored under
    # the best of the k! latent-to-category assignments
    cat_index = {c: i for i, c in enumerate(mini_schema.categories)}
    labels = []
    for s in mini_train:
        counts = {}
        for q in s.gold:
            counts[q.category] = counts.get(q.category, 0) + 1
        labels.append(cat_index[max(counts, key=counts.get)])
    labels = np.array(labels)
    zs, _ = infer_lcd_batch(result.params, xs)
    clusters = zs.argmax(axis=1)
    purity = max(
        float(np.mean(np.array(perm)[clusters] == labels))
        for perm in itertools.permutations(range(k))
    )
    return {
        "vocab": vocab,
        "xs": xs,
        "params0": params0,
        "result": result,
        "before": before,
        "after": after,
        "purity": purity,
    }
