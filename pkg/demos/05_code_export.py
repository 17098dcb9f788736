"""Emit a tree as a C function and check it against the tree itself.

The bundled interpreter parses the emitted text (not the tree), so agreeing
on every training configuration is evidence that the code is right.
"""

import numpy as np

from safetree import CruiseModel, determinize, export_code, interpret, learn, optimize, synthesize_safe

model = CruiseModel(v_min=-2, v_max=5, sensor=30, horizon=30, initial_states=((0, 0, 20),))
safe = synthesize_safe(model).to_table()
tree = learn(optimize(model, safe), 2)

src = export_code(tree)
print("\n".join(src.splitlines()[:20]))
print(f"... ({len(src.splitlines())} lines)")

controller = interpret(src)
expected = determinize(tree).batch(safe.X)
got = np.array([controller(*safe.schema.decode(row)) for row in safe.X])
print("agrees on", int((got == expected).sum()), "of", len(safe), "configurations")

for name in ("DEC", "NEU", "ACC"):
    print(f"return {name};", src.count(f"return {name};"), "times")
