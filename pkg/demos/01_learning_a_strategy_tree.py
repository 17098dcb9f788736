"""Learn a multi-label decision tree from a small permissive strategy.

Run: python demos/01_learning_a_strategy_tree.py
"""

from safetree import Feature, FeatureSchema, StrategyTable, learn, lookup, multilabel_entropy
from safetree.tree import Inner

schema = FeatureSchema((Feature("distance", "ordered", 0, 50), Feature("velocity", "ordered", 0, 80)))
actions = ("dec", "neu", "acc")

# every configuration maps to the SET of actions a controller may take there
table = StrategyTable.from_entries(schema, actions, [
    ((2, 51), {"dec"}),
    ((3, 20), {"dec"}),
    ((5, 30), {"dec"}),
    ((7, 1), {"dec", "neu"}),
    ((20, 46), {"dec", "neu"}),
    ((25, 25), {"dec", "neu", "acc"}),
    ((45, 70), {"dec", "neu"}),
])

tree = learn(table, k=2)


def show(i=0, depth=0):
    node = tree.nodes[i]
    pad = "    " * depth
    if isinstance(node, Inner):
        print(f"{pad}if {node.predicate.describe(schema)}:")
        show(node.left, depth + 1)
        print(f"{pad}else:")
        show(node.right, depth + 1)
    else:
        counts = node.stats.counts
        print(f"{pad}leaf {list(counts)}  entropy={multilabel_entropy(node.stats):.3f}")


show()
print("size:", tree.size)

# a leaf's output is its set of pure actions (allowed by every configuration in it)
for point in [(3, 20), (25, 25), (6.4, 0)]:
    print(point, "->", sorted(lookup(tree, point), key=actions.index))

# the serialized form is canonical: same table, same bytes
print(tree.dumps()[:120], "...")
