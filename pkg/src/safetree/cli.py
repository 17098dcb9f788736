"""Command-line entry point: ``safetree <verb> [options]``.

Exit codes: 0 success, 1 other errors, 2 unsatisfiable safety synthesis,
3 a leaf without pure action during tree construction.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .codegen import export_code
from .cruise import CruiseModel, optimize, synthesize_safe
from .errors import NoPureActionError, UnsatisfiableError
from .harness import (
    TableStrategy,
    confidence_half_width,
    monte_carlo,
    report_table1,
    sweep,
    write_sweep_csv,
    write_table1_csv,
)
from .pruning import safe_prune
from .strategy import load_strategy, save_strategy
from .tree import DecisionTree, learn
from .view import to_table

log = logging.getLogger("safetree")


def _model(args) -> CruiseModel:
    return CruiseModel.load(args.model) if args.model else CruiseModel()


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def cmd_synth_safe(args):
    model = _model(args)
    safe = synthesize_safe(model)
    log.info("safe states: %d (fixpoint after %d sweeps)", len(safe), safe.iterations)
    save_strategy(safe.to_table(), args.out)


def cmd_optimize(args):
    model = _model(args)
    allowed = load_strategy(args.allowed)
    if args.tree:
        allowed = to_table(DecisionTree.load(args.tree), allowed)
    opt = optimize(model, allowed, args.horizon)
    save_strategy(opt, args.out)


def cmd_learn_dt(args):
    tree = learn(load_strategy(args.strategy), args.k)
    log.info("tree size %d", tree.size)
    tree.save(args.out)


def cmd_prune(args):
    tree = safe_prune(DecisionTree.load(args.tree), args.p)
    log.info("tree size %d", tree.size)
    tree.save(args.out)


def cmd_export_code(args):
    src = export_code(DecisionTree.load(args.tree))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(src)
    else:
        sys.stdout.write(src)


def cmd_bdd_report(args):
    opt = load_strategy(args.strategy)
    safe = load_strategy(args.safe) if args.safe else None
    row = report_table1(None, opt, args.R, args.seed, args.name, safe)
    write_table1_csv([row], args.out)


def cmd_simulate(args):
    model = _model(args)
    if args.tree:
        strategy = DecisionTree.load(args.tree)
    else:
        strategy = TableStrategy(load_strategy(args.strategy))
    H = model.horizon if args.horizon is None else args.horizon
    res = monte_carlo(model, strategy, H, args.runs, args.seed)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "cost", "min_gap", "violation"])
        for i in range(args.runs):
            min_gap = res.min_gaps[i].min() if H else res.states[i, 0, 2]
            w.writerow([i, res.costs[i], min_gap, int(res.violations[i])])
    print(f"mean={res.costs.mean():.6g} ci95={confidence_half_width(res.costs):.6g} "
          f"violations={res.n_violations}")


def cmd_sweep(args):
    model = _model(args)
    safe = load_strategy(args.safe) if args.safe else synthesize_safe(model).to_table()
    cells = sweep(model, safe, _ints(args.ks), _ints(args.ps), args.horizon, args.runs, args.seed)
    write_sweep_csv(cells, args.out, tradeoff=args.tradeoff)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safetree", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def verb(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=name != "export-code")
        p.set_defaults(fn=fn)
        return p

    p = verb("synth-safe", cmd_synth_safe, "synthesize the maximally permissive safe strategy")
    p.add_argument("--model")

    p = verb("optimize", cmd_optimize, "value-iterate inside an allowed strategy")
    p.add_argument("--model")
    p.add_argument("--allowed", required=True, help="strategy file bounding the choices")
    p.add_argument("--tree", help="restrict further to the pure actions of this tree")
    p.add_argument("--horizon", type=int)

    p = verb("learn-dt", cmd_learn_dt, "learn a decision tree from a strategy file")
    p.add_argument("--strategy", required=True)
    p.add_argument("-k", "--min-split", dest="k", type=int, default=2, help="minimum split size")

    p = verb("prune", cmd_prune, "safe pruning rounds")
    p.add_argument("--tree", required=True)
    p.add_argument("-p", "--prune-rounds", dest="p", type=int, default=1)

    p = verb("export-code", cmd_export_code, "emit nested-if C code")
    p.add_argument("--tree", required=True)

    p = verb("bdd-report", cmd_bdd_report, "BDD vs DT size row")
    p.add_argument("--strategy", required=True)
    p.add_argument("--safe")
    p.add_argument("-R", type=int, default=40)
    p.add_argument("--name", default="cruise")

    p = verb("simulate", cmd_simulate, "Monte-Carlo runs of a strategy")
    p.add_argument("--model")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--tree")
    g.add_argument("--strategy")
    p.add_argument("--horizon", type=int)
    p.add_argument("--runs", type=int, default=1000)

    p = verb("sweep", cmd_sweep, "k x p size/performance sweep")
    p.add_argument("--model")
    p.add_argument("--safe")
    p.add_argument("--ks", default="2,10,100")
    p.add_argument("--ps", default="0,1,2")
    p.add_argument("--horizon", type=int)
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--tradeoff", action="store_true", help="add size/cost ratio columns")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.fn(args)
    except UnsatisfiableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoPureActionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
