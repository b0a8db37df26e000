"""Welch two-sample t-tests for comparing per-class recall samples."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betainc

SIGNIFICANCE = 0.05


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float

    def significant(self, alpha: float = SIGNIFICANCE) -> bool:
        return self.p_value < alpha


@dataclass(frozen=True)
class RecallSample:
    label: int
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise StatsError(f"class {self.label}: recall sample is empty")
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise StatsError(f"class {self.label}: recall values must lie in [0, 1]")


@dataclass(frozen=True)
class PairResult:
    pair: tuple[int, int]
    name: str
    result: TTestResult

    @property
    def significant(self) -> bool:
        return self.result.significant()


def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with ``df`` degrees of freedom.

    Uses P(|T| > |t|) = I_x(df/2, 1/2) with x = df / (df + t^2).
    """
    if not df > 0:
        raise StatsError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    tail = 0.5 * float(betainc(0.5 * df, 0.5, x))
    return tail if t >= 0 else 1.0 - tail


def two_sided_p(t: float, df: float) -> float:
    return min(1.0, 2.0 * student_t_sf(abs(t), df))


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise StatsError("each sample needs at least two values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0 and vb == 0:
        raise StatsError("both samples have zero variance; t is undefined")
    se_a, se_b = va / len(a), vb / len(b)
    se = se_a + se_b
    t = float((a.mean() - b.mean()) / math.sqrt(se))
    df = float(se * se / (se_a * se_a / (len(a) - 1) + se_b * se_b / (len(b) - 1)))
    return TTestResult(t_statistic=t, degrees_of_freedom=df, p_value=two_sided_p(t, df))


def _degenerate(a: np.ndarray, b: np.ndarray) -> TTestResult:
    # both samples constant: identical means give no evidence, distinct means are certain
    df = float(len(a) + len(b) - 2)
    if a.mean() == b.mean():
        return TTestResult(0.0, df, 1.0)
    return TTestResult(math.copysign(math.inf, a.mean() - b.mean()), df, 0.0)


def pairwise_class_recall_tests(samples: Sequence[RecallSample],
                                names: dict[int, str] | None = None) -> list[PairResult]:
    """One Welch test per unordered class pair, in (i, j) lexicographic order of labels.

    When both samples of a pair are constant the test is undefined; such
    pairs get p = 1 for equal values and p = 0 otherwise.
    """
    ordered = sorted(samples, key=lambda s: s.label)
    names = names or {}
    out = []
    for sa, sb in itertools.combinations(ordered, 2):
        a, b = np.asarray(sa.values), np.asarray(sb.values)
        if len(a) >= 2 and len(b) >= 2 and a.var() == 0 and b.var() == 0:
            result = _degenerate(a, b)
        else:
            result = welch_t_test(a, b)
        label = f"{names.get(sa.label, sa.label)}-{names.get(sb.label, sb.label)}"
        out.append(PairResult((sa.label, sb.label), label, result))
    return out
