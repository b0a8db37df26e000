"""Binary soft-margin kernel SVM trained by sequential minimal optimization.

The trainer solves the dual

    max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

two multipliers at a time. Each step picks a violating pair with a
second-order working-set rule and moves along the feasible direction to the
clipped analytic optimum, so the dual objective never decreases. The loop
stops once the KKT gap drops to ``tol``, which bounds every point's KKT
violation by ``tol``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

KERNEL_KINDS = ("linear", "polynomial", "rbf")
_KIND_ALIASES = {"poly": "polynomial"}

# Full Gram matrices are cached up to this many training samples.
GRAM_CACHE_LIMIT = 1000
# Stand-in curvature for non-positive eta, as in LIBSVM.
_TAU = 1e-12


class SvmError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    ``gamma=None`` means "one over the number of features", resolved when
    training starts.
    """

    kind: str = "rbf"
    gamma: float | None = None
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        if kind not in KERNEL_KINDS:
            raise SvmError(f"unknown kernel {self.kind!r}; expected one of {KERNEL_KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.gamma is not None and not self.gamma > 0:
            raise SvmError(f"gamma must be positive, got {self.gamma}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise SvmError(f"degree must be a positive integer, got {self.degree}")

    def resolved(self, n_features: int) -> "KernelSpec":
        if self.gamma is not None:
            return self
        return replace(self, gamma=1.0 / max(n_features, 1))

    def describe(self) -> str:
        return (f"kind={self.kind} gamma={_fmt(self.gamma)} "
                f"degree={self.degree} coef0={_fmt(self.coef0)}")


@dataclass(frozen=True)
class TrainerConfig:
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 100
    eps: float = 1e-5

    def __post_init__(self):
        if not self.C > 0:
            raise SvmError(f"C must be positive, got {self.C}")
        if not self.tol > 0:
            raise SvmError(f"tol must be positive, got {self.tol}")
        if not self.eps > 0:
            raise SvmError(f"eps must be positive, got {self.eps}")
        if int(self.max_passes) != self.max_passes or self.max_passes < 1:
            raise SvmError(f"max_passes must be a positive integer, got {self.max_passes}")


@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    support_vectors: np.ndarray  # (n_sv, d)
    alphas: np.ndarray           # (n_sv,), each in (eps, C]
    labels: np.ndarray           # (n_sv,), +/-1
    bias: float
    kernel: KernelSpec
    C: float
    n_features: int
    converged: bool = True
    n_iter: int = 0

    @property
    def n_sv(self) -> int:
        return len(self.alphas)

    @property
    def dual_coef(self) -> np.ndarray:
        return self.alphas * self.labels


@dataclass
class TrainingTrace:
    """Per-step record of a training run, filled when requested."""

    objective: list[float] = field(default_factory=list)
    gap: list[float] = field(default_factory=list)
    alphas: np.ndarray | None = None


def _fmt(v) -> str:
    return "none" if v is None else repr(float(v))


def gram(spec: KernelSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Kernel matrix between the rows of ``X`` and ``Y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise SvmError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if spec.kind == "linear":
        return X @ Y.T
    if spec.gamma is None:
        spec = spec.resolved(X.shape[1])
    if spec.kind == "polynomial":
        return (spec.gamma * (X @ Y.T) + spec.coef0) ** spec.degree
    sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * (X @ Y.T)
    return np.exp(-spec.gamma * np.maximum(sq, 0.0))


def kernel_eval(spec: KernelSpec, x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise SvmError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if spec.kind == "rbf":
        spec = spec.resolved(x.shape[0])
        d = x - y
        return math.exp(-spec.gamma * float(d @ d))
    return float(gram(spec, x[None, :], y[None, :])[0, 0])


class _KernelRows:
    """Kernel rows of the training set, cached whole when the set is small."""

    def __init__(self, spec: KernelSpec, X: np.ndarray):
        self.spec, self.X = spec, X
        self.full = gram(spec, X, X) if len(X) <= GRAM_CACHE_LIMIT else None
        self.diag = (np.diag(self.full).copy() if self.full is not None
                     else np.array([gram(spec, x[None], x[None])[0, 0] for x in X]))

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        return gram(self.spec, self.X[i:i + 1], self.X)[0]


def _up_low(alpha, y, C):
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    return up, low


def _kkt_gap(alpha, y, G, C):
    """``(m_up, m_low)``: max of -yG over the up set, min over the low set."""
    minus_yG = -y * G
    up, low = _up_low(alpha, y, C)
    return float(np.max(minus_yG[up])), float(np.min(minus_yG[low]))


def _best_partner(anchor_val, anchor_row, anchor_diag, v, allowed, diag, sign):
    diff = sign * (anchor_val - v)
    cand = allowed & (diff > 0)
    curv = anchor_diag + diag - 2.0 * anchor_row
    curv = np.where(curv > 0, curv, _TAU)
    gain = np.where(cand, diff * diff / curv, -np.inf)
    best = int(np.argmax(gain))
    return best, gain[best]


def _select_pair(alpha, y, G, C, K):
    """Working pair by a label-symmetric second-order rule.

    Two candidates are scored: the maximal violator of the up set paired
    with its best low-set partner, and the maximal violator of the low set
    paired with its best up-set partner (partners maximize the unclipped dual
    gain, as in Fan, Chen and Lin 2005). The larger gain wins. Negating
    every label swaps the two candidates, so the flipped problem follows the
    mirrored trajectory exactly. Returns ``(i, j, K_i, K_j)`` with ``i`` in
    the up set and ``j`` in the low set.
    """
    v = -y * G
    up, low = _up_low(alpha, y, C)
    i0 = int(np.argmax(np.where(up, v, -np.inf)))
    j0 = int(np.argmin(np.where(low, v, np.inf)))
    Ki0, Kj0 = K.row(i0), K.row(j0)
    ja, gain_a = _best_partner(v[i0], Ki0, K.diag[i0], v, low, K.diag, 1.0)
    ib, gain_b = _best_partner(v[j0], Kj0, K.diag[j0], v, up, K.diag, -1.0)
    if gain_a > gain_b or (gain_a == gain_b and sorted((i0, ja)) <= sorted((ib, j0))):
        return i0, ja, Ki0, K.row(ja)
    return ib, j0, K.row(ib), Kj0


def _dual_objective(alpha, G):
    # G = Q a - 1, so a'Qa = a.(G + 1)
    return float(alpha.sum() - 0.5 * alpha @ (G + 1.0))


def _bias(alpha, y, G, C, m_up, m_low):
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return float(np.mean(-y[free] * G[free]))
    return float(0.5 * (m_up + m_low))


def train_smo(samples, labels, cfg: TrainerConfig | None = None,
              kernel: KernelSpec | None = None, trace: TrainingTrace | None = None
              ) -> BinarySvmModel:
    """Train a binary SVM on ``samples`` with labels in {-1, +1}.

    Runs at most ``max_passes * n`` pair updates. If the KKT gap is still above
    ``tol`` after that, the current iterate is returned with
    ``converged=False``. Multipliers at or below ``eps`` are dropped from the
    returned model.
    """
    cfg = cfg or TrainerConfig()
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    y = np.asarray(labels, dtype=float).ravel()
    if len(X) != len(y):
        raise SvmError(f"{len(X)} samples but {len(y)} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        bad = sorted(set(y.tolist()) - {-1.0, 1.0})
        raise SvmError(f"labels must be -1 or +1, got {bad}")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise SvmError("training data must contain both labels")
    n, d = X.shape
    kernel = (kernel or KernelSpec()).resolved(d)
    C, tol, eps = float(cfg.C), float(cfg.tol), float(cfg.eps)

    K = _KernelRows(kernel, X)
    alpha = np.zeros(n)
    G = -np.ones(n)
    max_iter = int(cfg.max_passes) * n
    converged = False
    it = 0
    if trace is not None:
        trace.objective.append(0.0)

    while True:
        m_up, m_low = _kkt_gap(alpha, y, G, C)
        gap = m_up - m_low
        if trace is not None:
            trace.gap.append(float(gap))
        if gap <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1

        i, j, Ki, Kj = _select_pair(alpha, y, G, C, K)
        slope = (-y[i] * G[i]) - (-y[j] * G[j])
        eta = K.diag[i] + K.diag[j] - 2.0 * Ki[j]
        if eta <= 0:
            eta = _TAU
        # alpha_i += y_i t, alpha_j -= y_j t keeps sum(alpha * y) fixed
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(slope / eta, lim_i, lim_j)
        t = _snap_step(t, slope, eta, alpha[i], y[i], lim_i, alpha[j], -y[j], lim_j, C, eps)

        old_i, old_j = alpha[i], alpha[j]
        # land exactly on the bound when the step used up the whole room
        alpha[i] = (C if y[i] > 0 else 0.0) if t >= lim_i else min(max(old_i + y[i] * t, 0.0), C)
        alpha[j] = (0.0 if y[j] > 0 else C) if t >= lim_j else min(max(old_j - y[j] * t, 0.0), C)
        di, dj = alpha[i] - old_i, alpha[j] - old_j
        G += y * (y[i] * di * Ki + y[j] * dj * Kj)
        if trace is not None:
            trace.objective.append(_dual_objective(alpha, G))

    if not converged:
        log.warning("SMO stopped after %d updates with KKT gap %.3g > tol %.3g",
                    it, gap, tol)
    m_up, m_low = _kkt_gap(alpha, y, G, C)
    bias = _bias(alpha, y, G, C, m_up, m_low)
    if trace is not None:
        trace.alphas = alpha.copy()
    keep = alpha > eps
    return BinarySvmModel(
        support_vectors=X[keep].copy(),
        alphas=alpha[keep].copy(),
        labels=y[keep].copy(),
        bias=bias,
        kernel=kernel,
        C=C,
        n_features=d,
        converged=converged,
        n_iter=it,
    )


def _snap_step(t, slope, eta, a_i, s_i, lim_i, a_j, s_j, lim_j, C, eps):
    """Adjust ``t`` so a multiplier landing within ``eps`` of a bound hits it.

    Only accepted when the snapped step still does not lower the objective.
    ``s_*`` is the sign with which ``t`` moves each multiplier.
    """
    cap = min(lim_i, lim_j)
    for a, s in ((a_i, s_i), (a_j, s_j)):
        new = a + s * t
        for bound in (0.0, C):
            if new != bound and abs(new - bound) < eps:
                t_snap = (bound - a) / s
                if 0.0 <= t_snap <= cap and slope * t_snap - 0.5 * eta * t_snap ** 2 >= 0.0:
                    return t_snap
    return t


def decision_function(model: BinarySvmModel, X) -> np.ndarray:
    """Decision values for each row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise SvmError(f"dimension mismatch: model has {model.n_features} features, "
                       f"input has {X.shape[1]}")
    if model.n_sv == 0:
        return np.full(len(X), model.bias)
    return gram(model.kernel, X, model.support_vectors) @ model.dual_coef + model.bias


def decision_value(model: BinarySvmModel, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return float(decision_function(model, x[None, :])[0])


def sign(values) -> np.ndarray:
    # ties at exactly zero go to +1
    return np.where(np.asarray(values) >= 0, 1, -1)


def predict_sign(model: BinarySvmModel, x) -> int:
    return 1 if decision_value(model, x) >= 0 else -1


def kkt_violations(model: BinarySvmModel, X, y, alphas, tol: float) -> np.ndarray:
    """Boolean mask of training points whose KKT condition fails by more than ``tol``.

    ``alphas`` is the full multiplier vector from the trainer.
    """
    yf = np.asarray(y, dtype=float) * decision_function(model, X)
    at_zero = alphas <= 0
    at_c = alphas >= model.C
    free = ~at_zero & ~at_c
    bad = np.zeros(len(yf), dtype=bool)
    bad |= at_zero & (yf < 1 - tol)
    bad |= at_c & (yf > 1 + tol)
    bad |= free & (np.abs(yf - 1) > tol)
    return bad


# -- serialization -----------------------------------------------------------
#
# Binary model text format:
#   svm kind=<k> gamma=<g> degree=<d> coef0=<c> C=<C> bias=<b> n_features=<d> n_sv=<m> converged=<0|1> n_iter=<i>
#   <alpha> <label> <f_1> ... <f_d>        (m lines)
# Floats are written with repr() so they round-trip exactly.

def dumps_model(model: BinarySvmModel) -> str:
    k = model.kernel
    head = (f"svm kind={k.kind} gamma={_fmt(k.gamma)} degree={k.degree} coef0={_fmt(k.coef0)} "
            f"C={_fmt(model.C)} bias={_fmt(model.bias)} n_features={model.n_features} "
            f"n_sv={model.n_sv} converged={int(model.converged)} n_iter={model.n_iter}")
    lines = [head]
    for a, lab, sv in zip(model.alphas, model.labels, model.support_vectors):
        lines.append(" ".join([repr(float(a)), str(int(lab))] + [repr(float(v)) for v in sv]))
    return "\n".join(lines) + "\n"


def _parse_header(line: str, tag: str) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise SvmError(f"expected a {tag!r} header, got {line[:40]!r}")
    try:
        return dict(p.split("=", 1) for p in parts[1:])
    except ValueError:
        raise SvmError(f"malformed header: {line!r}") from None


def read_model(lines: list[str], start: int = 0) -> tuple[BinarySvmModel, int]:
    """Parse one binary model beginning at ``lines[start]``; returns (model, next index)."""
    h = _parse_header(lines[start], "svm")
    n_sv, d = int(h["n_sv"]), int(h["n_features"])
    rows = lines[start + 1:start + 1 + n_sv]
    if len(rows) != n_sv:
        raise SvmError(f"expected {n_sv} support-vector lines, found {len(rows)}")
    data = np.array([[float(v) for v in r.split()] for r in rows], dtype=float).reshape(n_sv, d + 2)
    gamma = None if h["gamma"] == "none" else float(h["gamma"])
    kernel = KernelSpec(kind=h["kind"], gamma=gamma, degree=int(h["degree"]), coef0=float(h["coef0"]))
    model = BinarySvmModel(
        support_vectors=data[:, 2:], alphas=data[:, 0], labels=data[:, 1],
        bias=float(h["bias"]), kernel=kernel, C=float(h["C"]), n_features=d,
        converged=bool(int(h.get("converged", "1"))), n_iter=int(h.get("n_iter", "0")),
    )
    return model, start + 1 + n_sv


def loads_model(text: str) -> BinarySvmModel:
    model, _ = read_model(text.splitlines())
    return model
