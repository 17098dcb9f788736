"""Shrink a tree by merging sibling leaves that share a pure action.

Larger minimum split size k stops learning early; safe pruning then merges
sibling leaves for p rounds.  Either way every leaf keeps at least one action
allowed by all of its configurations, so the tree never permits an action
the original strategy forbids.
"""

import numpy as np

from safetree import Feature, FeatureSchema, StrategyTable, learn, pure_actions, safe_prune
from safetree.pruning import prune_round

rng = np.random.default_rng(1)
schema = FeatureSchema((Feature("x", "ordered", 0, 59), Feature("y", "ordered", 0, 59)))
X = np.array([(x, y) for x in range(60) for y in range(60)])

# braking is always fine; the other two actions are allowed in overlapping regions, with some noise
dec = np.ones(len(X), dtype=bool)
neu = (X[:, 0] > 15) & (rng.random(len(X)) < 0.97)
acc = (X[:, 0] > 30) & (X[:, 1] < 40) & (rng.random(len(X)) < 0.95)
table = StrategyTable(schema, ("dec", "neu", "acc"), X, np.stack([dec, neu, acc], axis=1))

exact = learn(table, 2)
print(f"exact tree: {exact.size} nodes")

for k in (2, 10, 50, 200):
    base = learn(table, k)
    row = [safe_prune(base, p).size for p in range(4)]
    print(f"k={k:<4} sizes for p=0..3: {row}")

# round by round: sizes fall, and what a configuration may do only shrinks
tree = learn(table, 10)
allowed = tree.pure_matrix(table.X)
for r in range(1, 6):
    tree, merged = prune_round(tree)
    now = tree.pure_matrix(table.X)
    assert not (now & ~allowed).any() and not (now & ~table.Y).any()
    choice = now.sum(axis=1).mean()
    print(f"round {r}: merged {merged:3d}, size {tree.size:4d}, mean actions per configuration {choice:.2f}")
    allowed = now
    if not merged:
        break

leaf = tree.nodes[tree.leaves()[0]]
print("first leaf pure actions:", sorted(pure_actions(leaf.stats, tree.actions)))
