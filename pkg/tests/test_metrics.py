from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcsvm import metrics as mt


def frac(num, den):
    return Fraction(num, den) if den else Fraction(0)


def brute_force(cm):
    """Per-class precision/recall/F1 and accuracy by walking every sample."""
    k = len(cm)
    samples = [(a, p) for a in range(k) for p in range(k) for _ in range(cm[a][p])]
    out = []
    for c in range(k):
        tp = sum(1 for a, p in samples if a == c and p == c)
        fp = sum(1 for a, p in samples if a != c and p == c)
        fn = sum(1 for a, p in samples if a == c and p != c)
        prec, rec = frac(tp, tp + fp), frac(tp, tp + fn)
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
        out.append((prec, rec, f1))
    acc = frac(sum(1 for a, p in samples if a == p), len(samples))
    return out, acc


def random_confusion(rng):
    k = int(rng.integers(2, 7))
    cm = rng.integers(0, 8, size=(k, k))
    cm[rng.random((k, k)) < 0.3] = 0
    if cm.sum() == 0:
        cm[0, 0] = 1
    return cm


def check_against_oracle(cm):
    matrix = mt.ConfusionMatrix(np.asarray(cm), tuple(str(i) for i in range(len(cm))))
    expected, acc = brute_force(cm.tolist())
    for got, (p, r, f) in zip(mt.class_metrics(matrix), expected):
        assert got.precision == float(p)
        assert got.recall == float(r)
        assert got.f_measure == pytest.approx(float(f), rel=1e-15, abs=0)
    assert mt.overall_accuracy(matrix) == float(acc)
    assert mt.micro_recall(matrix) == mt.overall_accuracy(matrix)


@pytest.mark.parametrize("seed", range(20))
def test_matches_counting_oracle(seed):
    check_against_oracle(random_confusion(np.random.default_rng(seed)))


def test_worked_example():
    cm = mt.build_confusion([0, 1, 2], [0, 2, 2])
    np.testing.assert_array_equal(cm.counts, [[1, 0, 0], [0, 0, 1], [0, 0, 1]])
    per = mt.class_metrics(cm)
    assert (per[0].precision, per[0].recall, per[0].f_measure) == (1.0, 1.0, 1.0)
    assert (per[1].precision, per[1].recall, per[1].f_measure) == (0.0, 0.0, 0.0)
    assert per[2].precision == 0.5 and per[2].recall == 1.0
    assert per[2].f_measure == pytest.approx(2 / 3)
    assert mt.overall_accuracy(cm) == pytest.approx(2 / 3)


def test_build_confusion_fixed_classes_keeps_absent_rows():
    cm = mt.build_confusion([0, 0], [0, 4], classes=[0, 1, 2, 3, 4])
    assert cm.k == 5 and cm.total == 2
    assert cm.counts[0, 4] == 1 and cm.counts[1:].sum() == 0
    assert mt.class_metrics(cm)[3] == mt.ClassMetrics(0.0, 0.0, 0.0)


def test_healthy_style_counts():
    counts = mt.BinaryCounts(tp=46, fp=10, fn=4, tn=37)
    assert mt.precision(counts) == pytest.approx(46 / 56)
    assert mt.recall(counts) == pytest.approx(46 / 50)
    assert mt.binary_accuracy(counts) == pytest.approx(83 / 97)


def test_f_measure_anchor():
    assert mt.f_measure(0.82143, 0.92) == pytest.approx(0.86793, abs=5e-5)


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(0, 1))
def test_f_measure_symmetric_and_bounded(p, r):
    f = mt.f_measure(p, r)
    assert f == mt.f_measure(r, p)
    assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12


def test_f_measure_zero_convention():
    assert mt.f_measure(0.0, 0.0) == 0.0


def test_recall_equals_one_minus_miss_rate():
    counts = mt.BinaryCounts(tp=7, fp=3, fn=2, tn=11)
    assert mt.recall(counts) == 1 - counts.fn / (counts.tp + counts.fn)


def test_uniform_random_accuracy_near_chance():
    rng = np.random.default_rng(0)
    actual = rng.integers(0, 5, 10_000)
    predicted = rng.integers(0, 5, 10_000)
    acc = mt.overall_accuracy(mt.build_confusion(actual, predicted, classes=range(5)))
    assert abs(acc - 0.2) < 0.05


def test_errors():
    with pytest.raises(mt.MetricsError):
        mt.build_confusion([0, 1], [0])
    with pytest.raises(mt.MetricsError):
        mt.build_confusion([], [])
    with pytest.raises(mt.MetricsError):
        mt.build_confusion([0, 5], [0, 1], classes=[0, 1])
    with pytest.raises(mt.MetricsError):
        mt.overall_accuracy(mt.ConfusionMatrix(np.zeros((2, 2), int), ("a", "b")))
    with pytest.raises(mt.MetricsError):
        mt.ConfusionMatrix(np.zeros((2, 3), int), ("a", "b"))


def test_sum_of_matrices():
    a = mt.build_confusion([0, 1], [0, 0], classes=[0, 1])
    b = mt.build_confusion([1, 1], [1, 0], classes=[0, 1])
    np.testing.assert_array_equal((a + b).counts, [[1, 0], [2, 1]])


def test_pct_formatting():
    assert mt.pct(0.86793) == "86.793"
    assert mt.pct(0.6186) == "61.860"
    assert mt.pct(0.0) == "0.000"


def test_confusion_csv():
    cm = mt.build_confusion([0, 1, 1], [0, 1, 0], class_names=["Healthy", "Low"])
    assert mt.confusion_csv(cm).splitlines() == [
        "actual\\predicted,Healthy,Low", "Healthy,1,0", "Low,1,1"]
