"""Safe pruning: merge sibling leaves whose pure-action sets overlap."""

from __future__ import annotations

import sys
from typing import Sequence

from .tree import DecisionTree, Inner, Leaf, LeafStats


def pure_actions(stats: LeafStats, actions: Sequence[str] | None = None) -> frozenset:
    """Actions allowed by every configuration in the leaf (``n_a == 0``).

    Returns action names when ``actions`` is given, indices otherwise.
    """
    idx = [i for i, pure in enumerate(stats.pure_mask) if pure]
    if actions is None:
        return frozenset(idx)
    return frozenset(actions[i] for i in idx)


def _prune_round(tree: DecisionTree) -> tuple[list, int]:
    nodes = tree.nodes
    out: list = []
    merged = 0

    def emit(i):
        nonlocal merged
        node = nodes[i]
        if isinstance(node, Leaf):
            out.append(node)
            return
        left, right = nodes[node.left], nodes[node.right]
        if isinstance(left, Leaf) and isinstance(right, Leaf):
            common = [a and b for a, b in zip(left.stats.pure_mask, right.stats.pure_mask)]
            if any(common):
                # summed counts keep n_a == 0 exactly for the common pure actions
                out.append(Leaf(left.stats + right.stats))
                merged += 1
                return
        pos = len(out)
        out.append(None)
        emit(node.left)
        right_id = len(out)
        emit(node.right)
        out[pos] = Inner(node.predicate, pos + 1, right_id)

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, tree.depth() + 100))
    try:
        emit(0)
    finally:
        sys.setrecursionlimit(limit)
    return out, merged


def prune_round(tree: DecisionTree) -> tuple[DecisionTree, int]:
    """One round of safe pruning; also returns how many nodes were merged."""
    for leaf in tree.leaves():
        if not any(tree.nodes[leaf].stats.pure_mask):
            raise ValueError(f"leaf {leaf} has no pure action; safe pruning needs one everywhere")
    nodes, merged = _prune_round(tree)
    if not merged:
        return tree, 0
    return DecisionTree(tree.schema, tree.actions, nodes), merged


def safe_prune(tree: DecisionTree, p: int) -> DecisionTree:
    """Apply ``p`` rounds of safe pruning.

    Candidates are the inner nodes whose two children are leaves at the start
    of a round; merges made during a round only become candidates in the next.
    """
    if p < 0:
        raise ValueError("number of rounds must be non-negative")
    for _ in range(p):
        tree, merged = prune_round(tree)
        if not merged:
            break
    return tree
