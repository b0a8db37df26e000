"""Synthetic stand-in for the Cleveland file, for smoke runs and tests.

The generated text has the same format, class sizes (164/55/36/35/13) and
missing-value pattern (four ``ca``, two ``thal``) as the real data, with
features drawn from severity-shifted distributions. It is NOT the UCI data
and says nothing about real diagnostic performance.
"""
from __future__ import annotations

import numpy as np

CLASS_SIZES = {0: 164, 1: 55, 2: 36, 3: 35, 4: 13}


def _row(rng: np.random.Generator, s: int) -> list[float]:
    sev = s / 4.0
    age = float(np.clip(np.round(rng.normal(52 + 6 * sev, 8)), 29, 77))
    sex = float(rng.random() < 0.55 + 0.3 * sev)
    cp = float(4 if rng.random() < 0.3 + 0.5 * sev else rng.integers(1, 4))
    trestbps = float(np.clip(np.round(rng.normal(130 + 6 * sev, 17)), 94, 200))
    chol = float(np.clip(np.round(rng.normal(242 + 10 * sev, 50)), 126, 564))
    fbs = float(rng.random() < 0.15)
    restecg = float(rng.choice([0, 1, 2], p=[0.5 - 0.1 * sev, 0.02, 0.48 + 0.1 * sev]))
    thalach = float(np.clip(np.round(rng.normal(158 - 28 * sev, 20)), 71, 202))
    exang = float(rng.random() < 0.15 + 0.5 * sev)
    oldpeak = float(np.clip(np.round(rng.gamma(1.2 + 3 * sev, 0.5), 1), 0, 6.2))
    slope = float(rng.choice([1, 2, 3], p=[0.65 - 0.45 * sev, 0.3 + 0.4 * sev, 0.05 + 0.05 * sev]))
    ca = float(np.clip(np.round(rng.normal(0.3 + 1.8 * sev, 0.8)), 0, 3))
    thal = float(rng.choice([3, 6, 7], p=[0.75 - 0.55 * sev, 0.05 + 0.05 * sev, 0.2 + 0.5 * sev]))
    return [age, sex, cp, trestbps, chol, fbs, restecg, thalach, exang, oldpeak, slope, ca, thal]


def synthetic_cleveland_text(seed: int = 0) -> str:
    rng = np.random.default_rng(seed)
    rows = [(_row(rng, s), s) for s, n in CLASS_SIZES.items() for _ in range(n)]
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    holes = rng.choice(len(rows), size=6, replace=False)
    lines = []
    for idx, (feats, s) in enumerate(rows):
        tokens = [repr(v) for v in feats] + [str(s)]
        if idx in holes[:4]:
            tokens[11] = "?"
        elif idx in holes[4:]:
            tokens[12] = "?"
        lines.append(",".join(tokens))
    return "\n".join(lines) + "\n"
