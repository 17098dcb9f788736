import itertools

import numpy as np
import pytest

from safetree.bdd import (
    FALSE,
    TRUE,
    Bdd,
    BitEncoding,
    bdd_size,
    build_strategy_bdd,
    encode_pair,
    format_minterm,
    random_order_sizes,
    sift_reorder,
)
from safetree.cruise import CruiseModel, synthesize_safe
from safetree.errors import CapacityError
from safetree.strategy import Feature, FeatureSchema, StrategyTable

from conftest import ACTIONS


def oracle_size(tt, order):
    """ROBDD size (terminals included) of a truth table under ``order`` (top variable first).

    Nodes at a level are the distinct cofactors that depend on that level's variable.
    """
    n = int(np.log2(len(tt)))
    cube = np.asarray(tt, dtype=np.int8).reshape((2,) * n)
    cube = cube.transpose([n - 1 - v for v in order])  # axis i <-> order[i]
    count = 0
    for lvl in range(n):
        sub = cube.reshape(2**lvl, 2, -1)
        depends = (sub[:, 0] != sub[:, 1]).any(axis=1)
        rows = sub[depends].reshape(int(depends.sum()), 2 * sub.shape[2])
        count += len(np.unique(rows, axis=0)) if len(rows) else 0
    return count + len(np.unique(tt))


def level_cost(cube, above, v):
    """Nodes labelled ``v`` when exactly the variables in ``above`` sit higher."""
    n = cube.ndim
    rest = [u for u in range(n) if u not in above and u != v]
    sub = cube.transpose([n - 1 - u for u in [*above, v, *rest]]).reshape(2 ** len(above), 2, -1)
    depends = (sub[:, 0] != sub[:, 1]).any(axis=1)
    rows = sub[depends].reshape(int(depends.sum()), 2 * sub.shape[2])
    return len(np.unique(rows, axis=0)) if len(rows) else 0


def oracle_best_size(tt):
    """Minimum ROBDD size over all variable orders (dynamic program over variable subsets)."""
    n = int(np.log2(len(tt)))
    cube = np.asarray(tt, dtype=np.int8).reshape((2,) * n)
    best = {0: 0}
    for mask in range(1, 2**n):
        members = [v for v in range(n) if mask >> v & 1]
        best[mask] = min(
            best[mask & ~(1 << v)] + level_cost(cube, [u for u in members if u != v], v) for v in members
        )
    return best[2**n - 1] + len(np.unique(tt))


def bdd_of_truth_table(tt, order=None):
    n = int(np.log2(len(tt)))
    bdd = Bdd(n, order)
    a = np.flatnonzero(tt)
    bits = (a[:, None] >> np.arange(n)) & 1
    bdd.add_root(bdd.from_assignments(bits))
    return bdd


def test_encode_pair_example():
    enc = BitEncoding((("x", 3, 0), ("y", 3, 0)), ("a0",))
    lits = encode_pair(enc, (6, 2), "a0")
    assert format_minterm(lits) == "x2 ∧ x1 ∧ ¬x0 ∧ ¬y2 ∧ y1 ∧ ¬y0 ∧ a0"


def test_encode_zero():
    enc = BitEncoding((("x", 3, 0),), ())
    assert format_minterm(encode_pair(enc, (0,), 0)[:3]) == "¬x2 ∧ ¬x1 ∧ ¬x0"


def test_offset_encoding():
    schema = FeatureSchema((Feature("v", "ordered", -10, 20),))
    enc = BitEncoding.for_schema(schema, ("a",))
    assert enc.features == (("v", 5, 10),)
    assert enc.config_bits([[-10]]).tolist() == [[0, 0, 0, 0, 0]]
    assert enc.config_bits([[20]]).tolist() == [[1, 1, 1, 1, 0]]
    with pytest.raises(ValueError):
        enc.config_bits([[-11]])


def test_empty_table_is_false():
    schema = FeatureSchema((Feature("x", "ordered", 0, 7),))
    t = StrategyTable(schema, ACTIONS, np.zeros((0, 1)), np.zeros((0, 3)), validate=False)
    bdd = build_strategy_bdd(t)
    assert bdd.root == FALSE and bdd_size(bdd) == 1
    assert bdd_size(sift_reorder(bdd)) == 1


def test_constant_and_single_variable():
    bdd = Bdd(3)
    bdd.add_root(TRUE)
    assert bdd_size(bdd) == 1
    b = Bdd(1)
    b.add_root(b.variable(0))
    assert bdd_size(b, terminals=False) == 1 and bdd_size(b) == 3


def decode_and_check(table, enc, tt):
    """Exhaustive membership oracle: assignment is true iff it encodes (config, a) with a allowed."""
    n = enc.nvars
    a = np.arange(2**n, dtype=np.int64)
    bits = (a[:, None] >> np.arange(n)) & 1
    expected = np.zeros(2**n, dtype=bool)
    pos = 0
    values = []
    for _, width, offset in enc.features:
        v = np.zeros(2**n, dtype=np.int64)
        for b in range(width):
            v = (v << 1) | bits[:, pos + b]
        values.append(v - offset)
        pos += width
    act = bits[:, pos:]
    one_hot = act.sum(axis=1) == 1
    action = act.argmax(axis=1)
    members = {(tuple(table.X[i]), j) for i in range(len(table)) for j in np.flatnonzero(table.Y[i])}
    for i in np.flatnonzero(one_hot):
        expected[i] = (tuple(int(v[i]) for v in values), int(action[i])) in members
    assert np.array_equal(tt, expected)


def test_toy_table_membership(toy_table):
    enc = BitEncoding.for_schema(toy_table.schema, toy_table.actions)
    assert enc.nvars == 6 + 7 + 3
    bdd = build_strategy_bdd(toy_table, enc)
    decode_and_check(toy_table, enc, bdd.truth_table())


def test_mini_cruise_membership():
    model = CruiseModel(v_min=-2, v_max=5, sensor=30, initial_states=((0, 0, 20),))
    t = synthesize_safe(model).to_table()
    enc = BitEncoding.for_schema(t.schema, t.actions)
    assert enc.nvars <= 16
    bdd = build_strategy_bdd(t, enc)
    bdd.check()
    decode_and_check(t, enc, bdd.truth_table())


def test_capacity_exceeded(toy_table):
    with pytest.raises(CapacityError):
        build_strategy_bdd(toy_table, capacity=5)


def test_canonical_regardless_of_construction():
    rng = np.random.default_rng(2)
    tt = rng.random(2**5) < 0.4
    direct = bdd_of_truth_table(tt)
    # same function from apply over minterms
    b = Bdd(5)
    f = FALSE
    for a in np.flatnonzero(tt):
        term = TRUE
        for v in range(5):
            lit = b.variable(v) if (a >> v) & 1 else b.neg(b.variable(v))
            term = b.apply("and", term, lit)
        f = b.apply("or", f, term)
    b.add_root(f)
    b.collect()
    assert bdd_size(b) == bdd_size(direct) == oracle_size(tt, list(range(5)))
    assert np.array_equal(b.truth_table(), tt)


@pytest.mark.parametrize("seed", range(30))
def test_size_matches_oracle_any_order(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    tt = rng.random(2**n) < rng.random()
    order = rng.permutation(n).tolist()
    bdd = bdd_of_truth_table(tt, order)
    bdd.check()
    assert bdd_size(bdd) == oracle_size(tt, order)
    assert np.array_equal(bdd.truth_table(), tt)


@pytest.mark.parametrize("seed", range(40))
def test_sifting_preserves_function(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(2, 11))
    tt = rng.random(2**n) < rng.random()
    bdd = bdd_of_truth_table(tt, rng.permutation(n).tolist())
    before = bdd_size(bdd)
    sifted = sift_reorder(bdd)
    sifted.check()
    assert np.array_equal(sifted.truth_table(), tt)
    assert bdd_size(sifted) <= before
    assert bdd_size(sifted) == oracle_size(tt, sifted.var_at_level)
    # the input is left untouched
    assert bdd_size(bdd) == before and np.array_equal(bdd.truth_table(), tt)


def pairwise_and_or(n_pairs):
    n = 2 * n_pairs  # var 2i = x_i, var 2i+1 = y_i
    a = np.arange(2**n)
    tt = np.zeros(2**n, dtype=bool)
    for i in range(n_pairs):
        tt |= ((a >> (2 * i)) & 1).astype(bool) & ((a >> (2 * i + 1)) & 1).astype(bool)
    return tt


def test_sifting_shrinks_hostile_order():
    tt = pairwise_and_or(3)
    hostile = [0, 2, 4, 1, 3, 5]  # all x before all y
    best = oracle_best_size(tt)
    assert best == min(oracle_size(tt, list(p)) for p in itertools.permutations(range(6)))
    bdd = bdd_of_truth_table(tt, hostile)
    assert bdd_size(bdd) == oracle_size(tt, hostile) == 16
    sifted = sift_reorder(bdd)
    assert bdd_size(sifted) < bdd_size(bdd)
    assert bdd_size(sifted) == best == 8
    assert np.array_equal(sifted.truth_table(), tt)


def test_parity_is_order_invariant():
    # x0 ^ y0 ^ x1 ^ y1: every order gives the same size, so sifting cannot shrink it
    n = 4
    a = np.arange(2**n)
    tt = np.bitwise_xor.reduce((a[:, None] >> np.arange(n)) & 1, axis=1).astype(bool)
    sizes = {oracle_size(tt, list(p)) for p in itertools.permutations(range(n))}
    assert sizes == {9}
    bdd = bdd_of_truth_table(tt, [0, 2, 1, 3])
    assert bdd_size(sift_reorder(bdd)) == 9


def test_sifting_8_vars_reaches_oracle_range():
    rng = np.random.default_rng(77)
    for _ in range(5):
        tt = rng.random(2**8) < 0.3
        order = rng.permutation(8).tolist()
        sifted = sift_reorder(bdd_of_truth_table(tt, order))
        assert oracle_best_size(tt) <= bdd_size(sifted) <= oracle_size(tt, order)


def test_random_order_sizes(toy_table):
    sizes = random_order_sizes(toy_table, 5, seed=1)
    assert len(sizes) == 5 and all(s >= 3 for s in sizes)
    assert random_order_sizes(toy_table, 5, seed=1) == sizes
