"""Safe and optimal adaptive cruise control on a small grid, end to end.

  1. synthesize the most permissive strategy that keeps the gap >= 5 m at all times
  2. learn it as a decision tree, optionally smaller (k, p)
  3. optimize the expected summed gap inside what the tree allows
  4. learn the optimized strategy exactly and simulate it

The full grid (velocities -10..20, gaps 0..200) works the same way; it just
takes a minute or two.  Pass --full to use it.
"""

import sys
import time

from safetree import CruiseModel, learn, optimize, restrict, safe_prune, synthesize_safe, to_table
from safetree.harness import estimate_expected_cost, monte_carlo

if "--full" in sys.argv:
    model = CruiseModel()
else:
    model = CruiseModel(v_min=-4, v_max=8, sensor=60, horizon=50, initial_states=((0, 0, 40),))

t0 = time.time()
safe_set = synthesize_safe(model)
safe = safe_set.to_table()
print(f"safe configurations: {len(safe)} ({safe_set.iterations} fixpoint sweeps, {time.time() - t0:.1f}s)")
print("at vE=vF=0, gap 6, Front braking:", sorted(safe_set.allowed_modes(0, 0, 6, -2)))
print("far away:", sorted(safe_set.allowed_modes(0, 0, float("inf"), 0)))

runs = 2000
for k, p in [(2, 0), (10, 1), (50, 2)]:
    tree = safe_prune(learn(safe, k), p)
    allowed = to_table(tree, safe)
    assert restrict(safe, allowed)
    opt = optimize(model, allowed)
    opt_tree = learn(opt, 2)
    res = monte_carlo(model, opt_tree, model.horizon, runs, seed=7)
    mean, hw = estimate_expected_cost(model, opt_tree, model.horizon, runs, seed=7)
    print(f"k={k:<3} p={p}: safe tree {tree.size:5d} nodes, optimized tree {opt_tree.size:5d} nodes, "
          f"E[D] = {mean:8.1f} +- {hw:.1f}, violations {res.n_violations}")
