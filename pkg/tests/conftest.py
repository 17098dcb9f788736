import numpy as np
import pytest

from safetree.strategy import Feature, FeatureSchema, StrategyTable
from safetree.tree import DecisionTree, Inner, Leaf, LeafStats, Predicate, LE, learn

ACTIONS = ("dec", "neu", "acc")

TOY_ROWS = [
    ((2, 51), {"dec"}),
    ((3, 20), {"dec"}),
    ((5, 30), {"dec"}),
    ((7, 1), {"dec", "neu"}),
    ((20, 46), {"dec", "neu"}),
    ((25, 25), {"dec", "neu", "acc"}),
    ((45, 70), {"dec", "neu"}),
]


def toy_schema():
    return FeatureSchema((Feature("distance", "ordered", 0, 50), Feature("velocity", "ordered", 0, 80)))


@pytest.fixture
def toy_table():
    return StrategyTable.from_entries(toy_schema(), ACTIONS, TOY_ROWS)


@pytest.fixture
def merge_tree():
    """Inner node x <= 5 over two leaves whose pure sets are {dec} and {dec, neu}."""
    schema = FeatureSchema((Feature("x", "ordered", 0, 20),))
    nodes = [
        Inner(Predicate(0, LE, 5.0), 1, 2),
        Leaf(LeafStats(((0, 7), (7, 0), (7, 0)))),
        Leaf(LeafStats(((0, 7), (0, 7), (3, 4)))),
    ]
    return DecisionTree(schema, ACTIONS, nodes)


def random_table(rng, n_features=3, n_actions=3, n_entries=500, width=None, structured=False):
    """Random table over ordered features; ``structured`` makes labels depend on thresholds."""
    widths = width or [int(rng.integers(4, 40)) for _ in range(n_features)]
    if np.isscalar(widths):
        widths = [widths] * n_features
    lows = [int(rng.integers(-10, 10)) for _ in range(n_features)]
    schema = FeatureSchema(tuple(
        Feature(f"f{j}", "ordered", lo, lo + w - 1) for j, (lo, w) in enumerate(zip(lows, widths))
    ))
    total = int(np.prod(widths, dtype=np.int64))
    n = min(n_entries, total)
    keys = rng.choice(total, size=n, replace=False)
    X = np.empty((n, n_features), dtype=np.int64)
    rem = keys
    for j in range(n_features - 1, -1, -1):
        X[:, j] = rem % widths[j] + lows[j]
        rem = rem // widths[j]
    if structured:
        Y = np.zeros((n, n_actions), dtype=bool)
        for a in range(n_actions):
            j = int(rng.integers(n_features))
            t = rng.integers(lows[j], lows[j] + widths[j])
            Y[:, a] = X[:, j] <= t
            if rng.random() < 0.5:
                j2 = int(rng.integers(n_features))
                Y[:, a] ^= X[:, j2] % 2 == 0
    else:
        Y = rng.random((n, n_actions)) < 0.5
    Y[~Y.any(axis=1), int(rng.integers(n_actions))] = True
    actions = tuple(f"a{i}" for i in range(n_actions))
    return StrategyTable(schema, actions, X, Y)


def random_tree(rng, n_entries=None, k=None):
    """Learned tree on a random table; k > 2 only when every leaf keeps a pure action."""
    n = n_entries or int(rng.integers(20, 800))
    t = random_table(rng, n_features=int(rng.integers(1, 5)), n_entries=n, structured=bool(rng.random() < 0.5))
    if k is None:
        k = int(rng.choice([2, 2, 3, 5, 10, 30]))
    # widen one action everywhere so larger k never strands a leaf
    if k > 2:
        t = t.with_actions(t.Y | (np.arange(t.Y.shape[1]) == int(rng.integers(t.Y.shape[1]))))
    return t, learn(t, k)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
