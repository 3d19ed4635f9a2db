"""Exact-match evaluation for quadruple predictions.

A predicted quadruple counts only if all four elements equal a gold
quadruple; duplicates are handled as a multiset intersection so a quad
predicted twice cannot match one gold entry twice.  Spans are compared as
lowercase whitespace-normalized strings.  Scores are micro-averaged over
the corpus, with a breakdown over the four explicit/implicit combinations.
A matched prediction lands in its gold's bin and an unmatched one in the
bin of its own implicitness pattern; binning each quadruple by its own
pattern implements exactly that, because an exact match never crosses
bins.
"""

import csv
from collections import Counter
from dataclasses import dataclass, replace

from .schema import IMPLICIT_SUBSETS


@dataclass(frozen=True)
class EvalResult:
    tp: int
    n_pred: int
    n_gold: int

    @property
    def fp(self):
        return self.n_pred - self.tp

    @property
    def fn(self):
        return self.n_gold - self.tp

    @property
    def precision(self):
        return self.tp / self.n_pred if self.n_pred else 0.0

    @property
    def recall(self):
        return self.tp / self.n_gold if self.n_gold else 0.0

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r else 0.0


def _canon_span(span):
    return None if span is None else " ".join(span.lower().split())


def _canon(quad):
    return replace(quad, aspect=_canon_span(quad.aspect), opinion=_canon_span(quad.opinion))


def match_counts(pred_quads, gold_quads):
    pred = Counter(_canon(q) for q in pred_quads)
    gold = Counter(_canon(q) for q in gold_quads)
    tp = sum((pred & gold).values())
    return tp, sum(pred.values()), sum(gold.values())


def evaluate(pairs):
    """pairs: iterable of (predicted quads, gold quads) per sample."""
    tp = n_pred = n_gold = 0
    for pred_quads, gold_quads in pairs:
        t, p, g = match_counts(pred_quads, gold_quads)
        tp += t
        n_pred += p
        n_gold += g
    return EvalResult(tp=tp, n_pred=n_pred, n_gold=n_gold)


def evaluate_by_subset(pairs):
    """Overall result plus one per implicitness combination.

    A combination with no gold and no predicted quads maps to None (not
    applicable) rather than a zero score.
    """
    pairs = [(tuple(p), tuple(g)) for p, g in pairs]
    overall = evaluate(pairs)
    by_subset = {}
    for subset in IMPLICIT_SUBSETS:
        filtered = [
            (
                [q for q in pred if q.implicit_subset() == subset],
                [q for q in gold if q.implicit_subset() == subset],
            )
            for pred, gold in pairs
        ]
        result = evaluate(filtered)
        by_subset[subset] = None if result.n_pred == 0 and result.n_gold == 0 else result
    return overall, by_subset


def pairs_from_predictions(predictions):
    """Adapt decoded Prediction records (quads + .sample.gold) to pairs."""
    return [(p.quads, p.sample.gold) for p in predictions]


def load_linearized_quads(path, schema, separator=False):
    """Read one linearized quadruple sequence per line.

    Blank lines are kept as empty tuples so prediction and gold files stay
    line-aligned even when a sample yields nothing.
    """
    from .linearize import parse

    rows = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            tokens = raw.split()
            rows.append(tuple(parse(tokens, schema, separator=separator)) if tokens else ())
    return rows


def format_report(overall, by_subset=None):
    lines = ["subset    pred  gold    tp   precision  recall     f1"]

    def row(name, result):
        if result is None:
            return f"{name:<8}     -     -     -           -       -      -"
        return (
            f"{name:<8} {result.n_pred:>5} {result.n_gold:>5} {result.tp:>5}"
            f"   {result.precision:>9.4f} {result.recall:>7.4f} {result.f1:>6.4f}"
        )

    lines.append(row("ALL", overall))
    for subset in IMPLICIT_SUBSETS:
        if by_subset is not None:
            lines.append(row(subset, by_subset.get(subset)))
    return "\n".join(lines)


def write_csv(path, overall, by_subset=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subset", "n_pred", "n_gold", "tp", "precision", "recall", "f1"])

        def row(name, result):
            if result is None:
                writer.writerow([name, 0, 0, 0, "", "", ""])
            else:
                writer.writerow(
                    [
                        name, result.n_pred, result.n_gold, result.tp,
                        f"{result.precision:.6f}", f"{result.recall:.6f}",
                        f"{result.f1:.6f}",
                    ]
                )

        row("ALL", overall)
        for subset in IMPLICIT_SUBSETS:
            if by_subset is not None:
                row(subset, by_subset.get(subset))
