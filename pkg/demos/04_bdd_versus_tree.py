"""Compare a BDD encoding of a strategy with its decision tree.

Configuration-action pairs are bit-blasted (offset binary per feature, one
bit per action) and the strategy becomes the disjunction of its pairs.  BDD
size depends heavily on the variable order, so we build it for several
random orders and sift each one.
"""

import numpy as np

from safetree import BitEncoding, CruiseModel, bdd_size, build_strategy_bdd, encode_pair, optimize
from safetree import sift_reorder, synthesize_safe
from safetree.bdd import format_minterm
from safetree.harness import report_table1

enc = BitEncoding((("x", 3, 0), ("y", 3, 0)), ("a0",))
print("(x=6, y=2), a0 ->", format_minterm(encode_pair(enc, (6, 2), "a0")))

model = CruiseModel(v_min=-2, v_max=5, sensor=30, horizon=30, initial_states=((0, 0, 20),))
safe = synthesize_safe(model).to_table()
opt = optimize(model, safe)
enc = BitEncoding.for_schema(opt.schema, opt.actions)
print(f"{enc.nvars} boolean variables:", " ".join(enc.names))

rng = np.random.default_rng(0)
for _ in range(3):
    order = rng.permutation(enc.nvars)
    bdd = build_strategy_bdd(opt, enc, order=order)
    sifted = sift_reorder(bdd)
    same = np.array_equal(bdd.truth_table(), sifted.truth_table())
    print(f"random order: {bdd_size(bdd):5d} nodes, after sifting {bdd_size(sifted):4d} (same function: {same})")

row = report_table1(model, opt, R=20, seed=1, name="cruise-small", safe=safe)
for key, value in row.items():
    print(f"  {key:12s} {value}")
