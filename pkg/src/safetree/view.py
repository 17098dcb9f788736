"""Reading a decision tree back as a (permissive or deterministic) strategy."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import GridTooLargeError, SafetreeError
from .strategy import FeatureSchema, StrategyTable
from .tree import DecisionTree

LEXICOGRAPHIC = "lexicographic-first"
UNIFORM = "uniform-seeded"


def _encode_point(tree: DecisionTree, config: Sequence) -> list:
    if len(config) != len(tree.schema):
        raise ValueError(f"expected {len(tree.schema)} feature values, got {len(config)}")
    return [v if f.ordered else f.encode(v) for f, v in zip(tree.schema, config)]


def lookup(tree: DecisionTree, config: Sequence) -> frozenset:
    """Pure actions of the leaf reached by ``config`` (raw feature values, reals allowed)."""
    mask = tree.pure_matrix([_encode_point(tree, config)])[0]
    if not mask.any():
        raise SafetreeError(f"leaf reached by {tuple(config)} has no pure action")
    return frozenset(a for a, m in zip(tree.actions, mask) if m)


class Determinized:
    """Deterministic strategy obtained by resolving a tree's pure-action sets.

    Calling it with a configuration returns one action name; ``batch`` works
    on code matrices and returns action indices.
    """

    def __init__(self, tree: DecisionTree, rule: str = LEXICOGRAPHIC, seed=None):
        if rule not in (LEXICOGRAPHIC, UNIFORM):
            raise ValueError(f"unknown determinization rule {rule!r}")
        self.tree = tree
        self.rule = rule
        self.actions = tree.actions
        self._rng = np.random.default_rng(seed) if rule == UNIFORM else None

    def batch(self, X) -> np.ndarray:
        pure = self.tree.pure_matrix(X)
        counts = pure.sum(axis=1)
        if (counts == 0).any():
            raise SafetreeError("reached a leaf without pure action")
        if self.rule == LEXICOGRAPHIC:
            return pure.argmax(axis=1)
        pick = np.floor(self._rng.random(len(pure)) * counts).astype(np.int64)
        ranks = np.cumsum(pure, axis=1) - 1
        return np.argmax(pure & (ranks == pick[:, None]), axis=1)

    def __call__(self, config: Sequence) -> str:
        return self.actions[int(self.batch([_encode_point(self.tree, config)])[0])]


def determinize(tree: DecisionTree, rule: str = LEXICOGRAPHIC, seed=None) -> Determinized:
    return Determinized(tree, rule, seed)


def to_table(tree: DecisionTree, grid=None, cap: int = 10**7) -> StrategyTable:
    """Materialize the strategy of ``tree`` over a set of integer configurations.

    ``grid`` is a FeatureSchema (its full integer grid), a StrategyTable (its
    configurations) or a code matrix; by default the tree's own schema.
    """
    if grid is None:
        grid = tree.schema
    if isinstance(grid, FeatureSchema):
        if grid != tree.schema:
            raise ValueError("grid schema differs from the tree's schema")
        X = grid.grid(cap)
    elif isinstance(grid, StrategyTable):
        X = grid.X
    else:
        X = np.asarray(grid, dtype=np.int64)
        if len(X) > cap:
            raise GridTooLargeError(f"{len(X)} configurations exceed cap {cap}")
    return StrategyTable(tree.schema, tree.actions, X, tree.pure_matrix(X))
