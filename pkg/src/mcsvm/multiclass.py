"""Multiclass decompositions built from binary SVMs.

Five strategies share one trainer and kernel:

* ``oaa``   one binary model per class against the rest, argmax decoding
* ``oao``   one model per class pair, max-wins voting
* ``ddag``  the ``oao`` pair models evaluated along a decision DAG
* ``btsvm`` a binary tree of class subsets split by centroid clustering
* ``ecoc``  exhaustive error-correcting output code, Hamming decoding

Class "index" below means the position of a label in the sorted list of
training classes; every tie-break resolves to the lowest index.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .svm import (BinarySvmModel, KernelSpec, SvmError, TrainerConfig,
                  decision_function, dumps_model, read_model, train_smo)

STRATEGIES = ("oaa", "oao", "ddag", "btsvm", "ecoc")


class MulticlassError(ValueError):
    pass


@dataclass(frozen=True)
class TreeNode:
    """Internal node of a BT-SVM tree. ``model`` indexes ``binary_models``.

    ``left``/``right`` are node indices, or ``None`` when that side is a
    single class (a leaf).
    """

    classes: tuple[int, ...]   # class indices covered by this node
    left_classes: tuple[int, ...]
    right_classes: tuple[int, ...]
    model: int
    parent: int | None
    left: int | None = None
    right: int | None = None


@dataclass(frozen=True, eq=False)
class MulticlassModel:
    strategy: str
    classes: tuple[int, ...]
    binary_models: tuple[BinarySvmModel, ...]
    pairs: tuple[tuple[int, int], ...] | None = None   # oao / ddag, class indices
    tree: tuple[TreeNode, ...] | None = None           # btsvm, root first
    code: np.ndarray | None = None                     # ecoc, (k, L) of +/-1

    @property
    def k(self) -> int:
        return len(self.classes)

    def as_strategy(self, strategy: str) -> "MulticlassModel":
        """View pairwise models under the other pairwise decoder."""
        if {self.strategy, strategy} <= {"oao", "ddag"}:
            return MulticlassModel(strategy, self.classes, self.binary_models, pairs=self.pairs)
        raise MulticlassError(f"cannot reinterpret a {self.strategy} model as {strategy}")


# -- helpers -------------------------------------------------------------------

def _prepare(X, y) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y).ravel()
    if len(X) != len(y):
        raise MulticlassError(f"{len(X)} samples but {len(y)} labels")
    classes = tuple(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise MulticlassError(f"need at least two classes, got {list(classes)}")
    return X, y, classes


def _check_expected(classes, expected):
    if expected is None:
        return
    missing = [c for c in expected if c not in classes]
    if missing:
        raise MulticlassError(f"class {missing[0]} has no training samples")


def _train_dichotomy(X, y, positive, negative, cfg, kernel) -> BinarySvmModel:
    """Train +1 on labels in ``positive`` against -1 on ``negative``; others are left out."""
    pos = np.isin(y, positive)
    neg = np.isin(y, negative)
    mask = pos | neg
    target = np.where(pos[mask], 1.0, -1.0)
    return train_smo(X[mask], target, cfg, kernel)


def _decisions(model: MulticlassModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not model.binary_models:
        return np.empty((len(X), 0))
    return np.column_stack([decision_function(m, X) for m in model.binary_models])


def _check_strategy(model: MulticlassModel, *allowed: str):
    if model.strategy not in allowed:
        raise MulticlassError(f"expected a {'/'.join(allowed)} model, got {model.strategy}")


# -- one against all -------------------------------------------------------------

def train_oaa(X, y, cfg: TrainerConfig | None = None, kernel: KernelSpec | None = None,
              expected_classes: Sequence[int] | None = None) -> MulticlassModel:
    X, y, classes = _prepare(X, y)
    _check_expected(classes, expected_classes)
    models = tuple(
        _train_dichotomy(X, y, [c], [o for o in classes if o != c], cfg, kernel)
        for c in classes)
    return MulticlassModel("oaa", classes, models)


def decode_oaa(values: np.ndarray) -> np.ndarray:
    """Row-wise argmax (np.argmax already picks the lowest index on ties)."""
    return np.argmax(np.atleast_2d(values), axis=1)


def predict_oaa(model: MulticlassModel, x) -> int:
    _check_strategy(model, "oaa")
    return model.classes[int(decode_oaa(_decisions(model, x))[0])]


# -- one against one and the decision DAG ---------------------------------------

def train_oao(X, y, cfg: TrainerConfig | None = None, kernel: KernelSpec | None = None,
              expected_classes: Sequence[int] | None = None, strategy: str = "oao"
              ) -> MulticlassModel:
    X, y, classes = _prepare(X, y)
    _check_expected(classes, expected_classes)
    pairs = tuple(itertools.combinations(range(len(classes)), 2))
    models = tuple(
        _train_dichotomy(X, y, [classes[a]], [classes[b]], cfg, kernel) for a, b in pairs)
    return MulticlassModel(strategy, classes, models, pairs=pairs)


def train_ddag(X, y, cfg: TrainerConfig | None = None, kernel: KernelSpec | None = None,
               expected_classes: Sequence[int] | None = None) -> MulticlassModel:
    return train_oao(X, y, cfg, kernel, expected_classes, strategy="ddag")


def decode_oao_vote(pairs: Sequence[tuple[int, int]], values: Sequence[float], k: int) -> int:
    """Max-wins voting over pair decisions.

    A non-negative value is a vote for the first class of the pair. Vote ties
    go to the larger sum of |value| over the contests each tied class won,
    then to the lowest index.
    """
    votes = np.zeros(k, dtype=int)
    margin = np.zeros(k)
    for (a, b), v in zip(pairs, values):
        winner = a if v >= 0 else b
        votes[winner] += 1
        margin[winner] += abs(v)
    tied = np.flatnonzero(votes == votes.max())
    if len(tied) == 1:
        return int(tied[0])
    best = margin[tied].max()
    return int(tied[margin[tied] == best][0])


def predict_oao_vote(model: MulticlassModel, x) -> int:
    _check_strategy(model, "oao", "ddag")
    values = _decisions(model, x)[0]
    return model.classes[decode_oao_vote(model.pairs, values, model.k)]


def decode_ddag(pairs: Sequence[tuple[int, int]], values: Sequence[float], k: int
                ) -> tuple[int, list[tuple[int, int]]]:
    """Walk the DAG over candidates ``[0..k-1]``: test (first, last), drop the loser.

    Returns the surviving class index and the pairs evaluated, always k-1.
    """
    lookup = {p: v for p, v in zip(pairs, values)}
    candidates = list(range(k))
    path = []
    while len(candidates) > 1:
        a, b = candidates[0], candidates[-1]
        path.append((a, b))
        if lookup[(a, b)] >= 0:
            candidates.pop()
        else:
            candidates.pop(0)
    return candidates[0], path


def ddag_path(model: MulticlassModel, x) -> tuple[int, list[tuple[int, int]]]:
    """DDAG prediction evaluating only the k-1 pair models on the path.

    Returns the predicted label and the evaluated pairs (as labels).
    """
    _check_strategy(model, "ddag", "oao")
    index = {p: m for p, m in zip(model.pairs, model.binary_models)}
    x = np.atleast_2d(np.asarray(x, dtype=float))
    candidates = list(range(model.k))
    path = []
    while len(candidates) > 1:
        a, b = candidates[0], candidates[-1]
        path.append((model.classes[a], model.classes[b]))
        if decision_function(index[(a, b)], x)[0] >= 0:
            candidates.pop()
        else:
            candidates.pop(0)
    return model.classes[candidates[0]], path


def predict_ddag(model: MulticlassModel, x) -> int:
    return ddag_path(model, x)[0]


# -- binary tree ----------------------------------------------------------------

def split_classes(centroids: np.ndarray, members: Sequence[int]
                  ) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Cluster ``members`` (class indices) into two groups around the farthest centroids.

    The group seeded by the lower-indexed of the two farthest centroids is
    the left (+1) group. Distance ties pick the lexicographically first pair;
    a class equidistant from both seeds joins the left group.
    """
    members = sorted(members)
    best, seeds = -1.0, None
    for a, b in itertools.combinations(members, 2):
        dist = float(np.linalg.norm(centroids[a] - centroids[b]))
        if dist > best:
            best, seeds = dist, (a, b)
    left, right = [seeds[0]], [seeds[1]]
    for c in members:
        if c in seeds:
            continue
        dl = np.linalg.norm(centroids[c] - centroids[seeds[0]])
        dr = np.linalg.norm(centroids[c] - centroids[seeds[1]])
        (left if dl <= dr else right).append(c)
    return tuple(sorted(left)), tuple(sorted(right))


def train_btsvm(X, y, cfg: TrainerConfig | None = None, kernel: KernelSpec | None = None,
                expected_classes: Sequence[int] | None = None) -> MulticlassModel:
    X, y, classes = _prepare(X, y)
    _check_expected(classes, expected_classes)
    centroids = np.array([X[y == c].mean(axis=0) for c in classes])
    nodes: list[dict] = []
    models: list[BinarySvmModel] = []

    def build(members: tuple[int, ...], parent: int | None) -> int | None:
        if len(members) == 1:
            return None
        left, right = split_classes(centroids, members)
        models.append(_train_dichotomy(
            X, y, [classes[c] for c in left], [classes[c] for c in right], cfg, kernel))
        idx = len(nodes)
        nodes.append(dict(classes=members, left_classes=left, right_classes=right,
                          model=len(models) - 1, parent=parent))
        nodes[idx]["left"] = build(left, idx)
        nodes[idx]["right"] = build(right, idx)
        return idx

    build(tuple(range(len(classes))), None)
    return MulticlassModel("btsvm", classes, tuple(models),
                           tree=tuple(TreeNode(**n) for n in nodes))


def decode_btsvm(tree: Sequence[TreeNode], values: Sequence[float]) -> tuple[int, int]:
    """Follow +1 left / -1 right from the root; returns (class index, evaluations)."""
    node, steps = tree[0], 0
    while True:
        steps += 1
        go_left = values[node.model] >= 0
        nxt = node.left if go_left else node.right
        if nxt is None:
            side = node.left_classes if go_left else node.right_classes
            return side[0], steps
        node = tree[nxt]


def predict_btsvm(model: MulticlassModel, x) -> int:
    _check_strategy(model, "btsvm")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    node = model.tree[0]
    while True:
        go_left = decision_function(model.binary_models[node.model], x)[0] >= 0
        nxt = node.left if go_left else node.right
        if nxt is None:
            side = node.left_classes if go_left else node.right_classes
            return model.classes[side[0]]
        node = model.tree[nxt]


# -- exhaustive ECOC ------------------------------------------------------------

def build_exhaustive_code(k: int) -> np.ndarray:
    """Exhaustive code matrix for ``k`` classes, shape ``(k, 2**(k-1) - 1)``.

    Row 0 is all +1. Row ``i`` alternates blocks of ``2**(k-1-i)`` entries,
    -1 first; the final +1 block is one entry short, which removes the
    all-+1 column. What remains is every nontrivial dichotomy exactly once.
    """
    if not 3 <= k <= 11:
        raise MulticlassError(f"exhaustive codes need 3 <= k <= 11, got {k}")
    length = 2 ** (k - 1) - 1
    cols = np.arange(length)
    code = np.ones((k, length), dtype=int)
    for i in range(1, k):
        width = 2 ** (k - 1 - i)
        code[i] = np.where((cols // width) % 2 == 0, -1, 1)
    return code


def decode_hamming(code: np.ndarray, word: Sequence[int]) -> int:
    dist = (np.asarray(code) != np.asarray(word)[None, :]).sum(axis=1)
    return int(np.argmin(dist))


def train_ecoc(X, y, cfg: TrainerConfig | None = None, kernel: KernelSpec | None = None,
               expected_classes: Sequence[int] | None = None) -> MulticlassModel:
    X, y, classes = _prepare(X, y)
    _check_expected(classes, expected_classes)
    # two classes have one nontrivial dichotomy, which is the plain binary problem
    code = np.array([[1], [-1]]) if len(classes) == 2 else build_exhaustive_code(len(classes))
    models = []
    for col in code.T:
        pos = [classes[i] for i in range(len(classes)) if col[i] > 0]
        neg = [classes[i] for i in range(len(classes)) if col[i] < 0]
        models.append(_train_dichotomy(X, y, pos, neg, cfg, kernel))
    return MulticlassModel("ecoc", classes, tuple(models), code=code)


def predict_ecoc(model: MulticlassModel, x) -> int:
    _check_strategy(model, "ecoc")
    word = np.where(_decisions(model, x)[0] >= 0, 1, -1)
    return model.classes[decode_hamming(model.code, word)]


# -- dispatch -------------------------------------------------------------------

_TRAINERS = {
    "oaa": train_oaa,
    "oao": train_oao,
    "ddag": train_ddag,
    "btsvm": train_btsvm,
    "ecoc": train_ecoc,
}


def train(strategy: str, X, y, cfg: TrainerConfig | None = None,
          kernel: KernelSpec | None = None, expected_classes: Sequence[int] | None = None
          ) -> MulticlassModel:
    try:
        trainer = _TRAINERS[strategy]
    except KeyError:
        raise MulticlassError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}") from None
    return trainer(X, y, cfg, kernel, expected_classes=expected_classes)


def predict(model: MulticlassModel, X) -> np.ndarray:
    """Labels for every row of ``X``; equivalent to the per-strategy ``predict_*``."""
    values = _decisions(model, X)
    if model.strategy == "oaa":
        idx = decode_oaa(values)
    elif model.strategy == "oao":
        idx = [decode_oao_vote(model.pairs, row, model.k) for row in values]
    elif model.strategy == "ddag":
        idx = [decode_ddag(model.pairs, row, model.k)[0] for row in values]
    elif model.strategy == "btsvm":
        idx = [decode_btsvm(model.tree, row)[0] for row in values]
    elif model.strategy == "ecoc":
        words = np.where(values >= 0, 1, -1)
        idx = [decode_hamming(model.code, w) for w in words]
    else:
        raise MulticlassError(f"unknown strategy {model.strategy!r}")
    return np.asarray(model.classes)[np.asarray(idx, dtype=int)]


# -- serialization --------------------------------------------------------------
#
#   multiclass strategy=<s> classes=<c0,c1,...> n_models=<L>
#   pairs a:b a:b ...                         (oao, ddag; class indices)
#   node <parent|-1> <classes> <left> <right>  (btsvm, one per internal node,
#                                               class lists as i+j+k)
#   code <+1|-1 ...>                           (ecoc, one line per row)
#   <binary model block>                       (L times, in model order)

def _join(idx: Sequence[int]) -> str:
    return "+".join(str(i) for i in idx)


def dumps_multiclass(model: MulticlassModel) -> str:
    lines = [f"multiclass strategy={model.strategy} "
             f"classes={','.join(str(c) for c in model.classes)} n_models={len(model.binary_models)}"]
    if model.pairs is not None:
        lines.append("pairs " + " ".join(f"{a}:{b}" for a, b in model.pairs))
    if model.tree is not None:
        for node in model.tree:
            parent = -1 if node.parent is None else node.parent
            lines.append(f"node {parent} {_join(node.classes)} "
                         f"{_join(node.left_classes)} {_join(node.right_classes)}")
    if model.code is not None:
        for row in model.code:
            lines.append("code " + " ".join(f"{int(v):+d}" for v in row))
    text = "\n".join(lines) + "\n"
    return text + "".join(dumps_model(m) for m in model.binary_models)


def loads_multiclass(text: str) -> MulticlassModel:
    lines = text.splitlines()
    parts = lines[0].split()
    if not parts or parts[0] != "multiclass":
        raise MulticlassError("not a multiclass model file")
    head = dict(p.split("=", 1) for p in parts[1:])
    strategy = head["strategy"]
    classes = tuple(int(c) for c in head["classes"].split(","))
    n_models = int(head["n_models"])
    pairs, code_rows, node_specs = None, [], []
    pos = 1
    while pos < len(lines) and not lines[pos].startswith("svm"):
        tag, _, rest = lines[pos].partition(" ")
        if tag == "pairs":
            pairs = tuple(tuple(int(v) for v in p.split(":")) for p in rest.split())
        elif tag == "code":
            code_rows.append([int(v) for v in rest.split()])
        elif tag == "node":
            parent, cls, left, right = rest.split()
            node_specs.append((int(parent), *(tuple(int(v) for v in s.split("+"))
                                              for s in (cls, left, right))))
        else:
            raise MulticlassError(f"unknown structure line {lines[pos]!r}")
        pos += 1
    models = []
    for _ in range(n_models):
        try:
            m, pos = read_model(lines, pos)
        except (IndexError, SvmError) as exc:
            raise MulticlassError(f"truncated model file: {exc}") from None
        models.append(m)

    tree = None
    if node_specs:
        children: dict[int, dict[str, int]] = {}
        for idx, (parent, cls, _, _) in enumerate(node_specs):
            if parent >= 0:
                side = "left" if set(cls) == set(node_specs[parent][2]) else "right"
                children.setdefault(parent, {})[side] = idx
        tree = tuple(
            TreeNode(classes=cls, left_classes=left, right_classes=right, model=idx,
                     parent=None if parent < 0 else parent,
                     left=children.get(idx, {}).get("left"),
                     right=children.get(idx, {}).get("right"))
            for idx, (parent, cls, left, right) in enumerate(node_specs))
    code = np.array(code_rows, dtype=int) if code_rows else None
    return MulticlassModel(strategy, classes, tuple(models), pairs=pairs, tree=tree, code=code)
