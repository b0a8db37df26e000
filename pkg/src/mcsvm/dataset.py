"""Cleveland heart-disease ingestion, min-max scaling and the stratified holdout split.

The input is the UCI ``processed.cleveland.data`` file: 14 comma-separated
numeric fields per line, ``?`` marking a missing value.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import astuple, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FEATURE_NAMES: tuple[str, ...] = (
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg",
    "thalach", "exang", "oldpeak", "slope", "ca", "thal",
)
N_FEATURES = len(FEATURE_NAMES)
CLASS_NAMES: tuple[str, ...] = (
    "Healthy", "Sick-Low", "Sick-Medium", "Sick-High", "Sick-Serious",
)
MISSING = "?"

# Per-class (train, test) counts of the reference holdout, labels 0..4.
DEFAULT_SPLIT_COUNTS: dict[int, tuple[int, int]] = {
    0: (114, 50),
    1: (38, 17),
    2: (20, 16),
    3: (24, 11),
    4: (10, 3),
}


class DatasetError(ValueError):
    """Raised for unreadable input or an unsatisfiable split."""


@dataclass(frozen=True)
class PatientRecord:
    age: float
    sex: float
    cp: float
    trestbps: float
    chol: float
    fbs: float
    restecg: float
    thalach: float
    exang: float
    oldpeak: float
    slope: float
    ca: float
    thal: float
    num: int

    def __post_init__(self):
        if self.num not in (0, 1, 2, 3, 4):
            raise DatasetError(f"class label must be in 0..4, got {self.num}")

    @property
    def features(self) -> np.ndarray:
        return np.array(astuple(self)[:N_FEATURES], dtype=float)


@dataclass(frozen=True)
class NormalizationParams:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        if self.mins.shape != self.maxs.shape:
            raise DatasetError("min/max vectors differ in length")
        if np.any(self.maxs < self.mins):
            raise DatasetError("max < min for some feature")


@dataclass(frozen=True)
class SplitSpec:
    """Per-class ``(train_count, test_count)`` plus the shuffle seed."""

    counts: dict[int, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_SPLIT_COUNTS))
    rng_seed: int = 0

    def __post_init__(self):
        for label, (n_train, n_test) in self.counts.items():
            if n_train < 0 or n_test < 0:
                raise DatasetError(f"negative count for class {label}")


def _parse_token(token: str, lineno: int, column: str) -> float | None:
    token = token.strip()
    if token == MISSING:
        return None
    try:
        return float(token)
    except ValueError:
        raise DatasetError(
            f"line {lineno}: non-numeric value {token!r} in column {column!r}"
        ) from None


def _mode(values: Iterable[float]) -> float:
    # ties resolve to the smallest value
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def parse_cleveland(raw_text: str) -> list[PatientRecord]:
    """Parse the processed-Cleveland format into records.

    Missing feature values are replaced by the modal value of their column
    over the rows where it is present. Blank lines are ignored; every other
    line yields exactly one record. Labels 1-4 are kept distinct.
    """
    columns = FEATURE_NAMES + ("num",)
    rows: list[tuple[int, list[float | None]]] = []
    for lineno, line in enumerate(raw_text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens = line.split(",")
        if len(tokens) != len(columns):
            raise DatasetError(
                f"line {lineno}: expected {len(columns)} fields, got {len(tokens)}")
        values = [_parse_token(t, lineno, c) for t, c in zip(tokens, columns)]
        if values[-1] is None:
            raise DatasetError(f"line {lineno}: class label is missing")
        if values[-1] != int(values[-1]) or not 0 <= values[-1] <= 4:
            raise DatasetError(f"line {lineno}: class label {values[-1]!r} not in 0..4")
        rows.append((lineno, values))
    if not rows:
        raise DatasetError("empty input: no records found")

    fill: dict[int, float] = {}
    for j, name in enumerate(FEATURE_NAMES):
        present = [v[j] for _, v in rows if v[j] is not None]
        if len(present) < len(rows):
            if not present:
                raise DatasetError(f"column {name!r} has no observed values to impute from")
            fill[j] = _mode(present)

    records = []
    for _, values in rows:
        feats = [fill[j] if v is None else v for j, v in enumerate(values[:-1])]
        records.append(PatientRecord(*feats, num=int(values[-1])))
    return records


def load_cleveland(path: str | Path) -> list[PatientRecord]:
    return parse_cleveland(Path(path).read_text(encoding="utf-8"))


def format_cleveland(records: Sequence[PatientRecord]) -> str:
    """Serialize records back to the processed-Cleveland line format."""
    lines = []
    for rec in records:
        values = astuple(rec)
        lines.append(",".join([repr(float(v)) for v in values[:-1]] + [str(values[-1])]))
    return "\n".join(lines) + "\n"


def feature_matrix(records: Sequence[PatientRecord]) -> np.ndarray:
    return np.array([astuple(r)[:N_FEATURES] for r in records], dtype=float).reshape(-1, N_FEATURES)


def labels(records: Sequence[PatientRecord]) -> np.ndarray:
    return np.array([r.num for r in records], dtype=int)


def fit_normalization(records: Sequence[PatientRecord]) -> NormalizationParams:
    if not records:
        raise DatasetError("cannot fit normalization on an empty record list")
    X = feature_matrix(records)
    return NormalizationParams(mins=X.min(axis=0), maxs=X.max(axis=0))


def normalize_matrix(X: np.ndarray, params: NormalizationParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    span = params.maxs - params.mins
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (X - params.mins) / safe, 0.0)
    return np.clip(scaled, 0.0, 1.0)


def apply_normalization(record: PatientRecord, params: NormalizationParams) -> np.ndarray:
    """Map one record's features into [0, 1]; the label is not touched.

    Values outside the fitted range are clamped and a constant feature maps to 0.
    """
    return normalize_matrix(record.features[None, :], params)[0]


def stratified_split(
    records: Sequence[PatientRecord], spec: SplitSpec
) -> tuple[list[PatientRecord], list[PatientRecord]]:
    """Seeded per-class shuffle, then the first ``train_count`` go to train.

    Both outputs keep the input order. Every class in the data must appear in
    ``spec.counts`` with counts summing to that class's size.
    """
    by_class: dict[int, list[int]] = {}
    for idx, rec in enumerate(records):
        by_class.setdefault(rec.num, []).append(idx)
    for label in sorted(set(by_class) | set(spec.counts)):
        available = len(by_class.get(label, []))
        n_train, n_test = spec.counts.get(label, (0, 0))
        if n_train + n_test > available:
            raise DatasetError(
                f"class {label}: split requests {n_train}+{n_test} records "
                f"but only {available} are available")
        if n_train + n_test < available:
            raise DatasetError(
                f"class {label}: split covers {n_train + n_test} of {available} records")

    rng = np.random.default_rng(spec.rng_seed)
    train_idx: set[int] = set()
    for label in sorted(by_class):
        members = np.array(by_class[label])
        order = rng.permutation(len(members))
        train_idx.update(members[order[: spec.counts[label][0]]].tolist())
    train = [r for i, r in enumerate(records) if i in train_idx]
    test = [r for i, r in enumerate(records) if i not in train_idx]
    return train, test


def class_counts(records: Sequence[PatientRecord]) -> dict[int, int]:
    return dict(sorted(Counter(r.num for r in records).items()))


def write_normalized_csv(path: str | Path, X: np.ndarray, y: Sequence[int]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(FEATURE_NAMES) + ["num"])
    for row, label in zip(X, y):
        writer.writerow([f"{v:.6f}" for v in row] + [int(label)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def parse_split_counts(text: str) -> dict[int, tuple[int, int]]:
    """Parse ``"114:50,38:17,..."`` (one ``train:test`` pair per class, label order)."""
    counts = {}
    for label, item in enumerate(p for p in text.split(",") if p.strip()):
        try:
            n_train, n_test = (int(v) for v in item.split(":"))
        except ValueError:
            raise DatasetError(f"bad split entry {item!r}; expected train:test") from None
        counts[label] = (n_train, n_test)
    if not counts:
        raise DatasetError("split spec is empty")
    return counts

