import csv

import pytest

from quadgen import (
    Quadruple,
    Sample,
    dataset_stats,
    evaluate,
    evaluate_by_subset,
    format_report,
    linearize,
    load_linearized_quads,
    match_counts,
    pairs_from_predictions,
)
from quadgen.evaluation import EvalResult, write_csv
from quadgen.linearize import to_line


def quad(aspect, opinion, c1="FOOD", c2="QUALITY", sentiment="POSITIVE"):
    return Quadruple(aspect=aspect, category=c1, subcategory=c2, opinion=opinion,
                     sentiment=sentiment)


Q1 = quad("pasta", "great")
Q2 = quad(None, "slow", c1="SERVICE", c2="GENERAL", sentiment="NEGATIVE")
Q3 = quad("bar", None, c1="AMBIENCE", c2="GENERAL")
Q4 = quad(None, None, c1="DRINKS", c2="QUALITY", sentiment="NEUTRAL")


def test_perfect_prediction():
    result = evaluate([([Q1, Q2], [Q1, Q2])])
    assert (result.tp, result.fp, result.fn) == (2, 0, 0)
    assert result.precision == result.recall == result.f1 == 1.0


def test_disjoint_prediction():
    result = evaluate([([Q1], [Q2])])
    assert result.tp == 0
    assert result.precision == result.recall == result.f1 == 0.0


def test_zero_counts_define_zero_scores():
    result = evaluate([([], [])])
    assert (result.precision, result.recall, result.f1) == (0.0, 0.0, 0.0)


def test_duplicates_match_as_multiset():
    tp, n_pred, n_gold = match_counts([Q1, Q1], [Q1])
    assert (tp, n_pred, n_gold) == (1, 2, 1)
    result = evaluate([([Q1, Q1], [Q1])])
    assert (result.tp, result.fp, result.fn) == (1, 1, 0)
    assert result.precision == 0.5
    assert result.recall == 1.0
    assert abs(result.f1 - 2 / 3) < 1e-12
    # and symmetrically for gold-side duplicates
    assert match_counts([Q1], [Q1, Q1]) == (1, 1, 2)


def test_any_one_differing_element_breaks_the_match():
    for other in [
        quad("pastas", "great"),
        quad("pasta", "great", c1="DRINKS"),
        quad("pasta", "great", c2="VARIETY"),
        quad("pasta", "grate"),
        quad("pasta", "great", sentiment="NEGATIVE"),
        quad(None, "great"),
        quad("pasta", None),
    ]:
        assert match_counts([other], [Q1])[0] == 0


def test_span_canonicalization():
    pred = quad("Pasta  Dish", "REALLY great")
    gold = quad("pasta dish", "really  great")
    assert match_counts([pred], [gold])[0] == 1
    # category symbols stay case-sensitive
    lower = Quadruple("pasta dish", "food", "QUALITY", "really great", "POSITIVE")
    assert match_counts([lower], [gold])[0] == 0


def test_permutation_invariance():
    pairs = [([Q1, Q2, Q3], [Q3, Q1])]
    swapped = [([Q3, Q2, Q1], [Q1, Q3])]
    assert evaluate(pairs) == evaluate(swapped)


def test_monotonicity():
    base = evaluate([([Q1], [Q1, Q2])])
    with_correct = evaluate([([Q1, Q2], [Q1, Q2])])
    assert with_correct.f1 >= base.f1
    with_wrong = evaluate([([Q1, Q3], [Q1, Q2])])
    assert with_wrong.precision <= base.precision


def test_formula_cross_check():
    result = EvalResult(tp=3, n_pred=7, n_gold=5)
    p, r = 3 / 7, 3 / 5
    assert result.precision == p and result.recall == r
    assert abs(result.f1 - 2 * p * r / (p + r)) < 1e-12


def test_subset_breakdown_oracle():
    pairs = [([Q1, Q2], [Q1, Q2]), ([Q3, Q4], [Q3, Q4])]
    overall, by_subset = evaluate_by_subset(pairs)
    assert overall.f1 == 1.0
    for subset in ("EA&EO", "IA&EO", "EA&IO", "IA&IO"):
        assert by_subset[subset].f1 == 1.0


def test_subset_breakdown_perturbation():
    # dropping the implicit-opinion prediction hurts EA&IO only
    pairs = [([Q1], [Q1, Q3])]
    overall, by_subset = evaluate_by_subset(pairs)
    assert by_subset["EA&EO"].f1 == 1.0
    assert by_subset["EA&IO"].recall == 0.0
    assert by_subset["IA&EO"] is None and by_subset["IA&IO"] is None
    assert overall.tp == 1 and overall.n_gold == 2


def test_unmatched_prediction_lands_in_its_own_pattern_bin():
    pairs = [([Q2], [Q1])]
    _, by_subset = evaluate_by_subset(pairs)
    assert by_subset["IA&EO"].n_pred == 1 and by_subset["IA&EO"].n_gold == 0
    assert by_subset["EA&EO"].n_pred == 0 and by_subset["EA&EO"].n_gold == 1


def test_subset_gold_counts_match_dataset_partition(mini_test):
    pairs = [((), s.gold) for s in mini_test]
    _, by_subset = evaluate_by_subset(pairs)
    stats = dataset_stats({"test": mini_test})
    for subset, expected in stats.implicit.items():
        got = 0 if by_subset[subset] is None else by_subset[subset].n_gold
        assert got == expected


def test_format_report_layout():
    overall, by_subset = evaluate_by_subset([([Q1], [Q1])])
    text = format_report(overall, by_subset)
    lines = text.splitlines()
    assert lines[0].startswith("subset")
    assert lines[1].startswith("ALL") and "1.0000" in lines[1]
    assert any(line.startswith("IA&IO") and "-" in line for line in lines)


def test_write_csv(tmp_path):
    overall, by_subset = evaluate_by_subset([([Q1], [Q1, Q2])])
    path = tmp_path / "scores.csv"
    write_csv(path, overall, by_subset)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["subset"] == "ALL"
    assert rows[0]["tp"] == "1"
    by_name = {r["subset"]: r for r in rows}
    assert by_name["IA&EO"]["recall"] == "0.000000"
    assert by_name["IA&IO"]["precision"] == ""  # not applicable


def test_load_linearized_quads_keeps_blank_lines(tmp_path, mini_schema):
    path = tmp_path / "pred.txt"
    lines = [to_line(linearize([Q1])), "", to_line(linearize([Q2, Q3]))]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    rows = load_linearized_quads(path, mini_schema)
    assert rows == [(Q1,), (), (Q2, Q3)]


def test_pairs_from_predictions():
    class Pred:
        def __init__(self, quads, gold):
            self.quads = quads
            self.sample = Sample(text=("x",), gold=gold)

    pairs = pairs_from_predictions([Pred((Q1,), (Q1, Q2))])
    assert pairs == [((Q1,), (Q1, Q2))]
    assert evaluate(pairs).recall == 0.5
