import mpmath
import numpy as np
import pytest

from safetree.errors import CorruptInputError, NoPureActionError
from safetree.strategy import Feature, FeatureSchema, StrategyTable
from safetree.tree import (
    LE,
    DecisionTree,
    Inner,
    Leaf,
    LeafStats,
    Predicate,
    choose_split,
    learn,
    multilabel_entropy,
    size,
)

from conftest import ACTIONS, random_table, toy_schema


def expected_toy_tree():
    nodes = [
        Inner(Predicate(0, LE, 6.0), 1, 2),
        Leaf(LeafStats(((0, 3), (3, 0), (3, 0)))),
        Inner(Predicate(0, LE, 22.5), 3, 4),
        Leaf(LeafStats(((0, 2), (0, 2), (2, 0)))),
        Inner(Predicate(0, LE, 35.0), 5, 6),
        Leaf(LeafStats(((0, 1), (0, 1), (0, 1)))),
        Leaf(LeafStats(((0, 1), (0, 1), (1, 0)))),
    ]
    return DecisionTree(toy_schema(), ACTIONS, nodes)


def mp_binary_entropy(n, y):
    if n == 0 or y == 0:
        return mpmath.mpf(0)
    p = mpmath.mpf(y) / (n + y)
    return -p * mpmath.log(p, 2) - (1 - p) * mpmath.log(1 - p, 2)


def test_entropy_pure_leaf():
    assert multilabel_entropy(LeafStats(((0, 7), (7, 0), (7, 0)))) == 0


def test_entropy_against_high_precision():
    mpmath.mp.dps = 40
    counts = ((0, 7), (0, 7), (3, 4))
    expected = sum(mp_binary_entropy(n, y) for n, y in counts)
    got = multilabel_entropy(LeafStats(counts))
    assert abs(got - float(expected)) < 1e-12
    assert round(got, 5) == 0.98523


def test_entropy_random_against_high_precision():
    rng = np.random.default_rng(3)
    for _ in range(200):
        total = int(rng.integers(1, 50))
        counts = tuple((total - int(y), int(y)) for y in rng.integers(0, total + 1, size=4))
        expected = sum(mp_binary_entropy(n, y) for n, y in counts)
        assert multilabel_entropy(LeafStats(counts)) == pytest.approx(float(expected), rel=1e-12, abs=1e-15)


def test_entropy_single_configuration():
    assert multilabel_entropy(LeafStats(((0, 1), (1, 0), (0, 1)))) == 0


def test_entropy_empty_node_rejected():
    with pytest.raises(ValueError):
        multilabel_entropy(LeafStats(((0, 0), (0, 0))))


def test_choose_split_root(toy_table):
    pred, left, right = choose_split(toy_table)
    assert pred.describe(toy_table.schema) == "distance <= 6"
    assert sorted(toy_table.X[left, 0]) == [2, 3, 5]


def test_choose_split_second_level(toy_table):
    rows = np.flatnonzero(np.isin(toy_table.X[:, 0], [7, 20, 25, 45]))
    pred, left, right = choose_split(toy_table, rows)
    assert pred.describe(toy_table.schema) == "distance <= 22.5"


def test_choose_split_zero_entropy(toy_table):
    rows = np.flatnonzero(toy_table.X[:, 0] <= 5)
    assert choose_split(toy_table, rows) is None


def test_choose_split_corrupt():
    schema = FeatureSchema((Feature("x", "ordered", 0, 3),))
    t = StrategyTable(schema, ("a", "b"), [[1], [1]], [[1, 0], [0, 1]], validate=False)
    with pytest.raises(CorruptInputError):
        choose_split(t)


def test_learn_toy_tree(toy_table):
    tree = learn(toy_table, 2)
    assert tree.dumps() == expected_toy_tree().dumps()
    assert size(tree) == 7


def test_learn_constant_table():
    rng = np.random.default_rng(0)
    t = random_table(rng, n_entries=300)
    t = t.with_actions(np.tile([True, False, False], (len(t), 1)))
    tree = learn(t, 2)
    assert size(tree) == 1 and tree.nodes[0].stats.counts == ((0, 300), (300, 0), (300, 0))


@pytest.mark.parametrize("seed", range(5))
def test_learn_exact_random(seed):
    rng = np.random.default_rng(seed)
    t = random_table(rng, n_features=3, n_entries=500)
    tree = learn(t, 2)
    assert np.array_equal(tree.pure_matrix(t.X), t.Y)
    for leaf in tree.leaves():
        for n, y in tree.nodes[leaf].stats.counts:
            assert n == 0 or y == 0


def test_learn_categorical_feature():
    schema = FeatureSchema((Feature("d", "ordered", 0, 9), Feature("m", "categorical", values=(-2, 0, 2))))
    rng = np.random.default_rng(1)
    X = np.array([[d, u] for d in range(10) for u in range(3)])
    Y = np.stack([X[:, 1] == 1, X[:, 0] > 4, (X[:, 1] == 2) | (X[:, 0] < 2)], axis=1)
    Y[~Y.any(axis=1), 0] = True
    t = StrategyTable(schema, ACTIONS, X, Y)
    tree = learn(t, 2)
    assert np.array_equal(tree.pure_matrix(t.X), t.Y)
    assert any(isinstance(n, Inner) and n.predicate.rel == "=" for n in tree.nodes)
    assert DecisionTree.loads(tree.dumps()) == tree


def test_leaves_partition_training_set():
    rng = np.random.default_rng(11)
    t = random_table(rng, n_entries=400, structured=True)
    for k in (2, 5, 20):
        try:
            tree = learn(t, k)
        except NoPureActionError:
            continue
        leaf_of = tree.apply(t.X)
        totals = {leaf: tree.nodes[leaf].stats.total for leaf in tree.leaves()}
        assert sorted(totals) == sorted(set(leaf_of))
        for leaf, total in totals.items():
            assert (leaf_of == leaf).sum() == total
        pure = tree.pure_matrix(t.X)
        assert pure.any(axis=1).all()
        assert not (pure & ~t.Y).any()


def test_size_monotone_in_k():
    rng = np.random.default_rng(5)
    t = random_table(rng, n_entries=600, structured=True)
    t = t.with_actions(t.Y | np.array([True, False, False]))  # always a pure action available
    sizes = [learn(t, k).size for k in (2, 4, 8, 16, 64, 256, 1000)]
    assert sizes == sorted(sizes, reverse=True)
    assert sizes[-1] == 1


def test_no_pure_action_names_leaf():
    schema = FeatureSchema((Feature("x", "ordered", 0, 3),))
    t = StrategyTable(schema, ("a", "b"), [[0], [1], [2]], [[1, 0], [0, 1], [1, 0]])
    with pytest.raises(NoPureActionError, match="leaf without pure action"):
        learn(t, 5)


def test_learn_deterministic_and_order_invariant():
    rng = np.random.default_rng(9)
    t = random_table(rng, n_entries=300)
    a = learn(t, 2)
    assert learn(t, 2).dumps() == a.dumps()
    b = learn(t.permuted(rng.permutation(len(t))), 2)
    assert b.dumps() == a.dumps()


def test_serialization_round_trip(tmp_path, toy_table):
    tree = learn(toy_table, 2)
    p = tmp_path / "tree.json"
    tree.save(p)
    back = DecisionTree.load(p)
    assert back == tree and back.dumps() == tree.dumps()


def test_size_single_leaf():
    tree = DecisionTree(toy_schema(), ACTIONS, [Leaf(LeafStats(((0, 1), (1, 0), (1, 0))))])
    assert size(tree) == 1
