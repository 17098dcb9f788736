"""Monte-Carlo evaluation of cruise-control strategies and the size/performance sweeps.

Runs follow the period order flow -> Front picks its next mode -> Ego picks
its next mode.  The simulator tracks the true (real-valued) gap, also beyond
the sensor range; the controller observes the gap rounded down to the grid,
or FAR.  Run ``i`` of a batch draws from ``default_rng([seed, i])``, so
results do not depend on how runs are grouped.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bdd import random_order_sizes
from .cruise import CruiseModel, optimize
from .errors import NoPureActionError
from .pruning import safe_prune
from .strategy import StrategyTable, restrict
from .tree import DecisionTree, learn
from .view import determinize, to_table


class TableStrategy:
    """Deterministic strategy reading the first allowed action of a table entry."""

    def __init__(self, table: StrategyTable):
        self.table = table
        self.actions = table.actions

    def batch(self, X) -> np.ndarray:
        rows = self.table.locate(X)
        if (rows < 0).any():
            bad = np.asarray(X)[np.flatnonzero(rows < 0)[0]]
            raise KeyError(f"configuration {self.table.schema.decode(bad)} not in strategy table")
        return self.table.Y[rows].argmax(axis=1)

    def __call__(self, config) -> str:
        return self.actions[int(self.batch([self.table.schema.encode(config)])[0])]


def _batch_fn(strategy, model: CruiseModel):
    if isinstance(strategy, DecisionTree):
        strategy = determinize(strategy)
    if hasattr(strategy, "batch"):
        return strategy.batch
    schema = model.schema
    names = model.action_names

    def call_each(X):
        return np.array([names.index(strategy(schema.decode(row))) for row in X], dtype=np.int64)

    return call_each


@dataclass
class Run:
    """One simulated run.

    ``states[i]`` is the decision-point configuration (vE, vF, d, aE, aF)
    after Ego's i-th choice; ``min_gaps[i]`` is the smallest gap during
    period ``i + 1``.
    """

    states: np.ndarray
    min_gaps: np.ndarray
    cost: float
    seed: int
    run_index: int = 0

    @property
    def horizon(self) -> int:
        return len(self.min_gaps)

    def violations(self, safe_gap) -> int:
        return int((self.min_gaps < safe_gap).sum()) + int(self.states[0, 2] < safe_gap)


@dataclass
class BatchResult:
    states: np.ndarray  # (n_runs, H+1, 5)
    min_gaps: np.ndarray  # (n_runs, H)
    costs: np.ndarray  # (n_runs,)
    violations: np.ndarray  # (n_runs,) bool

    @property
    def n_violations(self) -> int:
        return int(self.violations.sum())


def observe(model: CruiseModel, vE, vF, d, u_idx) -> np.ndarray:
    """Grid configuration seen by the controller (code rows of ``model.schema``)."""
    code = np.where(d > model.sensor, model.far_code, np.floor(np.minimum(d, model.sensor)))
    return np.stack([vE, vF, code.astype(np.int64), u_idx], axis=1).astype(np.int64)


def simulate_batch(model: CruiseModel, strategy, horizon: int, seed: int, n_runs: int = 1,
                   first_run: int = 0) -> BatchResult:
    tb = model.tables
    choose = _batch_fn(strategy, model)
    na = len(model.accels)
    H = horizon
    idx = np.arange(first_run, first_run + n_runs)
    draws = np.stack([np.random.default_rng([seed, int(i)]).random(H) for i in idx]) if H else np.zeros((n_runs, 0))
    init = np.array([model.initial_states[int(i) % len(model.initial_states)] for i in idx], dtype=float)
    iE = init[:, 0].astype(np.int64) - model.v_min
    iF = init[:, 1].astype(np.int64) - model.v_min
    d = init[:, 2].copy()
    u = np.full(n_runs, model.accels.index(model.initial_front_mode), dtype=np.int64)
    accels = np.array(model.accels)

    def decide():
        c = np.asarray(choose(observe(model, iE + model.v_min, iF + model.v_min, d, u)), dtype=np.int64)
        if ((c < 0) | (c >= na)).any():
            raise ValueError("strategy returned an action outside the model's modes")
        return c

    c = decide()
    states = np.zeros((n_runs, H + 1, 5))
    min_gaps = np.zeros((n_runs, H))
    costs = np.zeros(n_runs)
    states[:, 0] = np.stack([iE + model.v_min, iF + model.v_min, d, accels[c], accels[u]], axis=1)
    for t in range(H):
        min_gaps[:, t] = d + tb.min_offset[iE, iF, c, u]
        d = d + tb.delta[iE, iF, c, u]
        iE = tb.next_e[iE, c]
        iF = tb.next_f[iF, u]
        costs += np.minimum(d, model.sensor)
        sup = tb.support[iF]
        pick = np.floor(draws[:, t] * tb.support_size[iF]).astype(np.int64)
        u = np.argmax(sup & (np.cumsum(sup, axis=1) - 1 == pick[:, None]), axis=1)
        c = decide()
        states[:, t + 1] = np.stack([iE + model.v_min, iF + model.v_min, d, accels[c], accels[u]], axis=1)
    violations = (min_gaps < model.safe_gap).any(axis=1) | (states[:, 0, 2] < model.safe_gap)
    return BatchResult(states, min_gaps, costs, violations)


def simulate(model: CruiseModel, strategy, horizon: int, seed: int, run_index: int = 0) -> Run:
    """One seeded run; identical inputs give a bit-identical run."""
    res = simulate_batch(model, strategy, horizon, seed, 1, run_index)
    return Run(res.states[0], res.min_gaps[0], float(res.costs[0]), seed, run_index)


def monte_carlo(model: CruiseModel, strategy, horizon: int, n_runs: int, seed: int,
                chunk: int = 20000) -> BatchResult:
    parts = [
        simulate_batch(model, strategy, horizon, seed, min(chunk, n_runs - s), s)
        for s in range(0, n_runs, chunk)
    ]
    return BatchResult(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                         ("states", "min_gaps", "costs", "violations")))


def confidence_half_width(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        return 0.0
    return float(1.96 * samples.std(ddof=1) / math.sqrt(len(samples)))


def estimate_expected_cost(model: CruiseModel, strategy, horizon: int, n_runs: int, seed: int):
    """Sample mean of the summed gap and the 95% normal-approximation half-width."""
    if n_runs < 1:
        raise ValueError("need at least one run")
    res = monte_carlo(model, strategy, horizon, n_runs, seed)
    return float(res.costs.mean()), confidence_half_width(res.costs)


# pipelines ----------------------------------------------------------------


def top_path(model: CruiseModel, safe: StrategyTable, horizon: int | None = None):
    """sigma_safe -> sigma_opt -> exact tree of sigma_opt."""
    opt = optimize(model, safe, horizon)
    return opt, learn(opt, 2)


@dataclass
class SweepCell:
    k: int
    p: int
    feasible: bool = True
    safe_tree_size: int | None = None
    tree_size: int | None = None
    mean: float | None = None
    ci_half_width: float | None = None
    violations: int | None = None
    sub_strategy: bool | None = None
    error: str = ""
    trees: dict = field(default_factory=dict, repr=False)


def sweep(model: CruiseModel, safe: StrategyTable, ks, ps, horizon: int | None = None,
          n_runs: int = 10_000, seed: int = 0, keep_trees: bool = False) -> list[SweepCell]:
    """For each (k, p): prune-learn from sigma_safe, optimize inside it, learn the result exactly."""
    H = model.horizon if horizon is None else horizon
    cells = []
    for k in ks:
        try:
            base = learn(safe, k)
        except NoPureActionError as exc:
            cells.extend(SweepCell(k, p, feasible=False, error=str(exc)) for p in ps)
            continue
        for p in ps:
            cell = SweepCell(k, p)
            tree = safe_prune(base, p)
            allowed = to_table(tree, safe)
            cell.sub_strategy = restrict(safe, allowed)
            opt = optimize(model, allowed, H)
            opt_tree = learn(opt, 2)
            res = monte_carlo(model, opt_tree, H, n_runs, seed)
            cell.safe_tree_size = tree.size
            cell.tree_size = opt_tree.size
            cell.mean = float(res.costs.mean())
            cell.ci_half_width = confidence_half_width(res.costs)
            cell.violations = res.n_violations
            if keep_trees:
                cell.trees = {"safe": tree, "opt": opt_tree, "opt_table": opt}
            cells.append(cell)
    return cells


SWEEP_COLUMNS = ["k", "p", "feasible", "safe_tree_size", "tree_size", "mean", "ci_half_width", "violations"]


def write_sweep_csv(cells, path, tradeoff: bool = False):
    """CSV of sweep cells; ``tradeoff`` adds size and cost ratios relative to cell (2, 0)."""
    cols = list(SWEEP_COLUMNS)
    ref = next((c for c in cells if c.k == 2 and c.p == 0 and c.feasible), None)
    if tradeoff:
        cols += ["size_ratio", "cost_ratio"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for c in cells:
            row = {k: v for k, v in asdict(c).items() if k in SWEEP_COLUMNS}
            if tradeoff:
                ok = ref is not None and c.feasible
                row["size_ratio"] = c.tree_size / ref.tree_size if ok else ""
                row["cost_ratio"] = c.mean / ref.mean if ok and ref.mean else ""
            w.writerow(row)


TABLE1_COLUMNS = ["model", "list_length", "relevant", "R", "bdd_min", "bdd_median", "bdd_max", "dt_size"]


def report_table1(model, opt: StrategyTable, R: int = 40, seed: int = 0, name: str | None = None,
                  safe: StrategyTable | None = None) -> dict:
    """Sizes of the list, BDD (min/median/max over R random orders, sifted) and exact DT.

    ``relevant`` counts entries where ``safe`` leaves a real choice (two or
    more actions); without ``safe`` every entry counts.
    """
    if safe is not None:
        relevant = int((safe.Y.sum(axis=1) >= 2).sum())
    else:
        relevant = len(opt)
    sizes = random_order_sizes(opt, R, seed)
    return {
        "model": name or ("cruise" if isinstance(model, CruiseModel) else str(model)),
        "list_length": len(opt),
        "relevant": relevant,
        "R": R,
        "bdd_min": int(np.min(sizes)),
        "bdd_median": float(np.median(sizes)),
        "bdd_max": int(np.max(sizes)),
        "dt_size": learn(opt, 2).size,
    }


def write_table1_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE1_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(r)
