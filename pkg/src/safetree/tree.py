"""Multi-label decision trees learned from permissive strategy tables.

Every leaf keeps, per action ``a``, the pair ``(n_a, y_a)``: how many of the
configurations it contains disallow and allow ``a``.  An action with
``n_a == 0`` is *pure*; only pure actions are ever output by the tree, which
is what keeps a tree learned from a safe strategy safe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import entr

from .errors import CorruptInputError, NoPureActionError
from .strategy import FeatureSchema, StrategyTable

LE = "<="
EQ = "="

_TIE_TOL = 1e-12
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class Predicate:
    feature: int
    rel: str
    threshold: object

    def describe(self, schema: FeatureSchema | None = None) -> str:
        name = schema[self.feature].name if schema is not None else f"x{self.feature}"
        thr = self.threshold
        if isinstance(thr, float) and thr.is_integer():
            thr = int(thr)
        return f"{name} {'<=' if self.rel == LE else '=='} {thr}"

    def to_json(self) -> dict:
        return {"feature": self.feature, "rel": self.rel, "threshold": self.threshold}


@dataclass(frozen=True)
class LeafStats:
    """Per-action ``(n_a, y_a)`` counts of one leaf."""

    counts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        counts = tuple((int(n), int(y)) for n, y in self.counts)
        object.__setattr__(self, "counts", counts)
        totals = {n + y for n, y in counts}
        if len(totals) > 1 or any(n < 0 or y < 0 for n, y in counts):
            raise ValueError(f"inconsistent leaf counts {counts}")

    @classmethod
    def from_allowed(cls, Y: np.ndarray) -> "LeafStats":
        y = np.asarray(Y, dtype=np.int64).sum(axis=0)
        n = len(Y)
        return cls(tuple((n - int(v), int(v)) for v in y))

    @property
    def total(self) -> int:
        return self.counts[0][0] + self.counts[0][1] if self.counts else 0

    @property
    def pure_mask(self) -> tuple[bool, ...]:
        return tuple(n == 0 for n, _ in self.counts)

    def __add__(self, other: "LeafStats") -> "LeafStats":
        return LeafStats(
            tuple((n1 + n2, y1 + y2) for (n1, y1), (n2, y2) in zip(self.counts, other.counts))
        )


@dataclass(frozen=True)
class Inner:
    predicate: Predicate
    left: int
    right: int


@dataclass(frozen=True)
class Leaf:
    stats: LeafStats


def _binary_entropy(p):
    return (entr(p) + entr(1.0 - p)) / _LN2


def multilabel_entropy(stats: LeafStats) -> float:
    """Sum over actions of the binary entropy of the fraction allowing it."""
    n = stats.total
    if n <= 0:
        raise ValueError("entropy of an empty node is undefined")
    p = np.array([y for _, y in stats.counts], dtype=float) / n
    return float(_binary_entropy(p).sum())


class DecisionTree:
    """Immutable binary tree; node 0 is the root, ids are in preorder.

    A configuration satisfying an inner node's predicate goes to ``left``.
    """

    def __init__(self, schema: FeatureSchema, actions: Sequence[str], nodes: Sequence):
        self.schema = schema
        self.actions = tuple(actions)
        self.nodes = tuple(nodes)
        self._compiled = None

    def __len__(self):
        return len(self.nodes)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def leaves(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if isinstance(n, Leaf)]

    def __eq__(self, other):
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return (self.schema, self.actions, self.nodes) == (other.schema, other.actions, other.nodes)

    def __repr__(self):
        return f"DecisionTree(size={self.size}, leaves={len(self.leaves())})"

    def depth(self) -> int:
        depth = {0: 0}
        for i, node in enumerate(self.nodes):
            if isinstance(node, Inner):
                depth[node.left] = depth[node.right] = depth[i] + 1
        return max(depth.values())

    # evaluation -------------------------------------------------------

    def _compile(self):
        if self._compiled is None:
            m = len(self.nodes)
            feature = np.zeros(m, dtype=np.int64)
            thr = np.zeros(m, dtype=float)
            is_eq = np.zeros(m, dtype=bool)
            left = np.full(m, -1, dtype=np.int64)
            right = np.full(m, -1, dtype=np.int64)
            pure = np.zeros((m, len(self.actions)), dtype=bool)
            for i, node in enumerate(self.nodes):
                if isinstance(node, Inner):
                    p = node.predicate
                    feature[i] = p.feature
                    is_eq[i] = p.rel == EQ
                    thr[i] = self.schema[p.feature].encode(p.threshold) if is_eq[i] else p.threshold
                    left[i], right[i] = node.left, node.right
                else:
                    pure[i] = node.stats.pure_mask
            self._compiled = (feature, thr, is_eq, left, right, pure)
        return self._compiled

    def apply(self, X) -> np.ndarray:
        """Leaf id reached by each row of ``X`` (code matrix; reals allowed for ordered features)."""
        feature, thr, is_eq, left, right, _ = self._compile()
        X = np.asarray(X, dtype=float).reshape(-1, len(self.schema))
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = rows[left[node] >= 0]
        while len(active):
            cur = node[active]
            val = X[active, feature[cur]]
            go = np.where(is_eq[cur], val == thr[cur], val <= thr[cur])
            node[active] = np.where(go, left[cur], right[cur])
            active = active[left[node[active]] >= 0]
        return node

    def pure_matrix(self, X) -> np.ndarray:
        """Boolean matrix of pure actions at the leaf of each row of ``X``."""
        return self._compile()[5][self.apply(X)]

    # serialization ----------------------------------------------------

    def to_json(self) -> dict:
        nodes = []
        for i, node in enumerate(self.nodes):
            if isinstance(node, Inner):
                nodes.append(
                    {"id": i, "predicate": node.predicate.to_json(), "left": node.left, "right": node.right}
                )
            else:
                nodes.append({"id": i, "leaf": {"counts": [list(c) for c in node.stats.counts]}})
        return {"features": self.schema.to_json(), "actions": list(self.actions), "nodes": nodes}

    def dumps(self) -> str:
        """Canonical serialization (sorted keys, no whitespace)."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict) -> "DecisionTree":
        schema = FeatureSchema.from_json(obj["features"])
        nodes = [None] * len(obj["nodes"])
        for item in obj["nodes"]:
            if "leaf" in item:
                nodes[item["id"]] = Leaf(LeafStats(tuple(map(tuple, item["leaf"]["counts"]))))
            else:
                p = item["predicate"]
                thr = p["threshold"]
                if p["rel"] == LE:
                    thr = float(thr)
                nodes[item["id"]] = Inner(Predicate(p["feature"], p["rel"], thr), item["left"], item["right"])
        return cls(schema, obj["actions"], nodes)

    @classmethod
    def loads(cls, text: str) -> "DecisionTree":
        return cls.from_json(json.loads(text))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "DecisionTree":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def size(tree: DecisionTree) -> int:
    """Total number of nodes, inner nodes and leaves alike."""
    return tree.size


# learning ---------------------------------------------------------------


def _split_scores(v: np.ndarray, Y: np.ndarray, ordered: bool):
    """Candidate splits of one feature: (weighted entropy, threshold codes, left mask builder)."""
    m = len(v)
    order = np.argsort(v, kind="stable")
    vs = v[order]
    change = np.flatnonzero(vs[1:] != vs[:-1])
    if len(change) == 0:
        return None
    cum = np.cumsum(Y[order], axis=0)
    tot = cum[-1]
    if ordered:
        nl = (change + 1).astype(float)
        yl = cum[change]
        thresholds = (vs[change] + vs[change + 1]) / 2.0
    else:
        ends = np.append(change, m - 1)
        starts = np.insert(change + 1, 0, 0)
        before = np.vstack([np.zeros((1, Y.shape[1]), dtype=cum.dtype), cum])
        yl = before[ends + 1] - before[starts]
        nl = (ends - starts + 1).astype(float)
        thresholds = vs[starts]
    nr = m - nl
    yr = tot - yl
    hl = _binary_entropy(yl / nl[:, None]).sum(axis=1)
    hr = _binary_entropy(yr / nr[:, None]).sum(axis=1)
    score = (nl * hl + nr * hr) / m
    return score, thresholds


def _best_split(X: np.ndarray, Y: np.ndarray, schema: FeatureSchema):
    """Lowest-entropy predicate as ``(feature, threshold code, ordered)`` or None."""
    per_feature = []
    for j, f in enumerate(schema):
        per_feature.append(_split_scores(X[:, j], Y, f.ordered))
    mins = [r[0].min() for r in per_feature if r is not None]
    if not mins:
        return None
    best = min(mins)
    tol = _TIE_TOL * max(1.0, abs(best))
    for j, r in enumerate(per_feature):
        if r is None:
            continue
        score, thresholds = r
        hits = np.flatnonzero(score <= best + tol)
        if len(hits):
            # candidates are already sorted by threshold within a feature
            return j, thresholds[hits[0]], schema[j].ordered
    return None


def _has_entropy(Y: np.ndarray) -> bool:
    col = Y.sum(axis=0)
    return bool(((col > 0) & (col < len(Y))).any())


def choose_split(table: StrategyTable, rows=None):
    """Best predicate for the configurations ``rows`` of ``table`` (all by default).

    Returns ``(predicate, left_rows, right_rows)``, or None when the node has
    zero entropy. Raises CorruptInputError if the rows cannot be separated.
    """
    rows = np.arange(len(table)) if rows is None else np.asarray(rows)
    X, Y = table.X[rows], table.Y[rows].astype(np.int64)
    if len(rows) < 2 or not _has_entropy(Y):
        return None
    found = _best_split(X, Y, table.schema)
    if found is None:
        raise CorruptInputError("identical configurations with different action sets")
    j, code, ordered = found
    mask = X[:, j] <= code if ordered else X[:, j] == code
    return _make_predicate(table.schema, j, code, ordered), rows[mask], rows[~mask]


def _make_predicate(schema, j, code, ordered):
    if ordered:
        return Predicate(j, LE, float(code))
    return Predicate(j, EQ, schema[j].decode(code))


def learn(table: StrategyTable, k: int = 2) -> DecisionTree:
    """Grow a multi-label tree, splitting nodes with positive entropy and at least ``k`` entries.

    With ``k == 2`` every leaf has zero entropy, so the tree reproduces the
    table exactly. Larger ``k`` stops earlier; a leaf left without any pure
    action raises NoPureActionError.
    """
    if k < 2:
        raise ValueError("minimum split size must be at least 2")
    schema = table.schema
    X = table.X
    Yall = table.Y.astype(np.int64)
    nodes: list = []
    parent_of_right: dict[int, int] = {}
    # (rows, path, parent id if this is a right child)
    stack = [(np.arange(len(table)), (), None)]
    while stack:
        rows, path, right_parent = stack.pop()
        nid = len(nodes)
        if right_parent is not None:
            parent_of_right[right_parent] = nid
        Y = Yall[rows]
        found = None
        if len(rows) >= k and _has_entropy(Y):
            found = _best_split(X[rows], Y, schema)
            if found is None:
                raise CorruptInputError("identical configurations with different action sets")
        if found is None:
            stats = LeafStats.from_allowed(Y)
            if not any(stats.pure_mask):
                raise NoPureActionError(list(path), stats.counts)
            nodes.append(Leaf(stats))
            continue
        j, code, ordered = found
        pred = _make_predicate(schema, j, code, ordered)
        col = X[rows, j]
        mask = col <= code if ordered else col == code
        text = pred.describe(schema)
        nodes.append(pred)
        stack.append((rows[~mask], path + (f"not ({text})",), nid))
        stack.append((rows[mask], path + (text,), None))
    for i, node in enumerate(nodes):
        if isinstance(node, Predicate):
            nodes[i] = Inner(node, i + 1, parent_of_right[i])
    return DecisionTree(schema, table.actions, nodes)
