"""Two-car adaptive cruise control as a hybrid MDP on an integer grid.

Ego (controlled) follows Front (environment).  Both switch between the
accelerations in ``accels`` at every period; velocities saturate at
``[v_min, v_max]``.  The gap must stay at least ``safe_gap`` at every instant,
not only at decision points.  Beyond ``sensor`` meters Front is FAR.

A decision-point configuration is ``(vE, vF, d, aF)``: Ego chooses its next
mode after seeing Front's new mode.  Ego's previous mode does not influence
the future, so it is not part of the strategy's input.  In strategy tables
the gap feature takes integer values ``0..sensor`` and ``sensor + 1`` for FAR.

Because velocities stay on the integer grid and the gap dynamics are a pure
translation in the initial gap, everything the synthesis needs is tabulated
once per ``(vE, vF, aE, aF)``: the gap change over a period and the minimum
of ``d(t) - d(0)`` on ``[0, P]``, both computed exactly with rationals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import UnsatisfiableError
from .mdp import FiniteMdp, value_iteration
from .strategy import CATEGORICAL, Feature, FeatureSchema, StrategyTable
from .tree import DecisionTree
from .view import to_table

FAR = math.inf

_NAMES = {-2: "dec", 0: "neu", 2: "acc"}


@dataclass(frozen=True)
class CruiseModel:
    period: int = 1
    safe_gap: int = 5
    sensor: int = 200
    v_min: int = -10
    v_max: int = 20
    accels: tuple = (-2, 0, 2)
    opponent: str = "uniform"
    opponent_modes: tuple | None = None
    horizon: int = 100
    initial_states: tuple = ((0, 0, 100),)
    initial_front_mode: int = 0

    def __post_init__(self):
        object.__setattr__(self, "accels", tuple(sorted(self.accels)))
        object.__setattr__(self, "initial_states", tuple(tuple(s) for s in self.initial_states))
        if self.opponent_modes is not None:
            object.__setattr__(self, "opponent_modes", tuple(sorted(self.opponent_modes)))
        if self.opponent not in ("uniform", "no-saturating-choices"):
            raise ValueError(f"unknown opponent option {self.opponent!r}")
        if not 0 <= self.safe_gap < self.sensor:
            raise ValueError("need 0 <= safe_gap < sensor")
        if self.period <= 0 or any((a * self.period) % 1 for a in self.accels):
            raise ValueError("accelerations times period must be integers")

    # option files -----------------------------------------------------

    def to_json(self) -> dict:
        d = asdict(self)
        d["accels"] = list(self.accels)
        d["initial_states"] = [list(s) for s in self.initial_states]
        d["opponent_modes"] = None if self.opponent_modes is None else list(self.opponent_modes)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "CruiseModel":
        obj = dict(obj)
        for key in ("accels", "opponent_modes"):
            if obj.get(key) is not None:
                obj[key] = tuple(obj[key])
        if "initial_states" in obj:
            obj["initial_states"] = tuple(tuple(s) for s in obj["initial_states"])
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "CruiseModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    # grid -------------------------------------------------------------

    @property
    def velocities(self) -> range:
        return range(self.v_min, self.v_max + 1)

    @property
    def far_code(self) -> int:
        return self.sensor + 1

    @property
    def action_names(self) -> tuple:
        return tuple(_NAMES.get(a, f"a{a}") for a in self.accels)

    @property
    def schema(self) -> FeatureSchema:
        return FeatureSchema((
            Feature("vE", "ordered", self.v_min, self.v_max),
            Feature("vF", "ordered", self.v_min, self.v_max),
            Feature("d", "ordered", 0, self.far_code),
            Feature("aF", CATEGORICAL, values=self.accels),
        ))

    def front_modes(self, vF) -> tuple:
        """Support of Front's next mode right after a flow ending at velocity ``vF``."""
        modes = self.accels if self.opponent_modes is None else self.opponent_modes
        if self.opponent == "no-saturating-choices":
            modes = tuple(a for a in modes if not (a < 0 and vF <= self.v_min) and not (a > 0 and vF >= self.v_max))
        return modes

    @cached_property
    def tables(self) -> "_Tables":
        return _Tables(self)


@dataclass(frozen=True)
class CruiseState:
    vE: object
    vF: object
    d: object
    aE: int = 0
    aF: int = 0

    @property
    def far(self) -> bool:
        return self.d == FAR


# exact kinematics ---------------------------------------------------------


def _car(v0, a, lo, hi):
    """Saturation time of a car accelerating at ``a`` from ``v0`` (inf if never)."""
    if a > 0:
        return Fraction(hi - v0) / a
    if a < 0:
        return Fraction(lo - v0) / a
    return math.inf


def _position(v0, a, ts, t):
    t1 = t if t <= ts else ts
    return v0 * t1 + Fraction(a) * t1 * t1 / 2 + (v0 + a * t1) * (t - t1)


def _velocity(v0, a, ts, t):
    t1 = t if t <= ts else ts
    return v0 + a * t1


def _gap_offset(vE, vF, aE, aF, model, t):
    """``d(t) - d(0)`` for the given modes."""
    tE = _car(vE, aE, model.v_min, model.v_max)
    tF = _car(vF, aF, model.v_min, model.v_max)
    return _position(vF, aF, tF, t) - _position(vE, aE, tE, t)


def _min_gap_offset(vE, vF, aE, aF, model, horizon):
    """Exact minimum of ``d(t) - d(0)`` over ``t`` in ``[0, horizon]``."""
    horizon = Fraction(horizon)
    tE = _car(vE, aE, model.v_min, model.v_max)
    tF = _car(vF, aF, model.v_min, model.v_max)
    cuts = sorted({Fraction(0), horizon} | {t for t in (tE, tF) if 0 < t < horizon})
    candidates = list(cuts)
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        slope = (aF if mid < tF else 0) - (aE if mid < tE else 0)
        if slope:
            r_a = _velocity(vF, aF, tF, a) - _velocity(vE, aE, tE, a)
            t_star = a - Fraction(r_a) / slope
            if a < t_star < b:
                candidates.append(t_star)
    return min(_gap_offset(vE, vF, aE, aF, model, t) for t in candidates)


def flow(s: CruiseState, tau, model: CruiseModel, far_cut: bool = True) -> CruiseState:
    """State after ``tau`` time units in the current modes (exact for rational inputs).

    A gap beyond the sensor range becomes FAR unless ``far_cut`` is False.
    """
    if not 0 < tau <= model.period:
        raise ValueError("need 0 < tau <= period")
    tau = Fraction(tau)
    tE = _car(s.vE, s.aE, model.v_min, model.v_max)
    tF = _car(s.vF, s.aF, model.v_min, model.v_max)
    vE = _velocity(s.vE, s.aE, tE, tau)
    vF = _velocity(s.vF, s.aF, tF, tau)
    if s.far:
        d = FAR
    else:
        d = s.d + _position(s.vF, s.aF, tF, tau) - _position(s.vE, s.aE, tE, tau)
        if far_cut and d > model.sensor:
            d = FAR
    return CruiseState(vE, vF, d, s.aE, s.aF)


def min_gap_over_period(s: CruiseState, model: CruiseModel):
    """Exact minimum gap over one period in the state's modes."""
    if s.far:
        raise ValueError("minimum gap is undefined for FAR")
    return s.d + _min_gap_offset(s.vE, s.vF, s.aE, s.aF, model, model.period)


def opponent_support(s: CruiseState, model: CruiseModel) -> dict:
    """Distribution of Front's next mode: uniform over the support."""
    modes = model.front_modes(s.vF)
    return {m: Fraction(1, len(modes)) for m in modes}


class _Tables:
    """Per-(vE, vF, aE, aF) tabulation of the one-period dynamics."""

    def __init__(self, model: CruiseModel):
        self.model = model
        vs = list(model.velocities)
        na = len(model.accels)
        nv = len(vs)
        self.delta = np.zeros((nv, nv, na, na))
        self.min_offset = np.zeros((nv, nv, na, na))
        self.next_e = np.zeros((nv, na), dtype=np.int64)
        self.next_f = np.zeros((nv, na), dtype=np.int64)
        P = model.period
        for i, v in enumerate(vs):
            for c, a in enumerate(model.accels):
                nxt = _velocity(v, a, _car(v, a, model.v_min, model.v_max), Fraction(P))
                self.next_e[i, c] = self.next_f[i, c] = int(nxt) - model.v_min
        for i, vE in enumerate(vs):
            for j, vF in enumerate(vs):
                for c, aE in enumerate(model.accels):
                    for u, aF in enumerate(model.accels):
                        self.delta[i, j, c, u] = float(_gap_offset(vE, vF, aE, aF, model, Fraction(P)))
                        self.min_offset[i, j, c, u] = float(_min_gap_offset(vE, vF, aE, aF, model, P))
        # support[v, u]: Front may pick mode u right after reaching velocity index v
        self.support = np.zeros((nv, na), dtype=bool)
        for i, v in enumerate(vs):
            for m in model.front_modes(v):
                self.support[i, model.accels.index(m)] = True
        self.support_size = self.support.sum(axis=1)

    def successor_gap(self, d_code):
        """Grid gap after one period from integer gap codes (FAR = sensor + 1).

        Shape (nv, nv, na, na) + d_code.shape; -1 marks a negative gap.
        """
        m = self.model
        d_code = np.asarray(d_code)
        delta = self.delta.reshape(self.delta.shape + (1,) * d_code.ndim)
        far = d_code == m.far_code
        base = np.where(far, m.sensor, d_code)
        nxt = base + delta
        code = np.floor(nxt).astype(np.int64)
        code = np.where(nxt > m.sensor, m.far_code, code)
        code = np.where(far & (delta >= 0), m.far_code, code)
        return np.where(code < 0, -1, code)


@dataclass
class SafeSet:
    """Greatest safe region of the grid game with its maximally permissive strategy.

    ``allowed[iE, iF, d, u, c]`` says whether Ego may pick mode ``c`` in the
    configuration with velocity indices ``iE, iF``, gap code ``d`` and Front
    mode index ``u``; ``safe`` is its projection.
    """

    model: CruiseModel
    safe: np.ndarray
    allowed: np.ndarray
    iterations: int = 0

    def contains(self, vE, vF, d, aF) -> bool:
        return bool(self.safe[self._index(vE, vF, d, aF)])

    def allowed_modes(self, vE, vF, d, aF) -> frozenset:
        mask = self.allowed[self._index(vE, vF, d, aF)]
        return frozenset(a for a, ok in zip(self.model.accels, mask) if ok)

    def _index(self, vE, vF, d, aF):
        m = self.model
        code = m.far_code if d == FAR else int(math.floor(d))
        if code < 0:
            code = 0
        return (vE - m.v_min, vF - m.v_min, code, m.accels.index(aF))

    def to_table(self) -> StrategyTable:
        m = self.model
        iE, iF, d, u = np.nonzero(self.safe)
        X = np.stack([iE + m.v_min, iF + m.v_min, d, u], axis=1)
        Y = self.allowed[iE, iF, d, u]
        return StrategyTable(m.schema, m.action_names, X, Y)

    def __len__(self):
        return int(self.safe.sum())


def synthesize_safe(model: CruiseModel, check_initial: bool = True) -> SafeSet:
    """Greatest fixpoint of the safety game on the integer grid.

    Ego may pick mode ``c`` in a configuration when the exact intra-period
    minimum gap stays at least ``safe_gap`` and, for every mode Front may pick
    next, the successor (gap rounded down to the grid) is still safe.
    """
    tb = model.tables
    nv = len(model.velocities)
    na = len(model.accels)
    nd = model.far_code + 1
    d_codes = np.arange(nd)
    # (nv, nv, na_c, na_u, nd)
    succ_d = tb.successor_gap(d_codes)
    base = np.where(d_codes == model.far_code, model.sensor, d_codes).astype(float)
    min_ok = (base + tb.min_offset[..., None]) >= model.safe_gap
    min_ok &= (base >= model.safe_gap)
    # reorder to (iE, iF, d, u, c)
    succ_d = succ_d.transpose(0, 1, 4, 3, 2)
    min_ok = min_ok.transpose(0, 1, 4, 3, 2)
    iE = np.arange(nv)[:, None, None, None, None]
    iF = np.arange(nv)[None, :, None, None, None]
    c = np.arange(na)[None, None, None, None, :]
    u = np.arange(na)[None, None, None, :, None]
    nextE = np.broadcast_to(tb.next_e[iE, c], succ_d.shape)
    nextF = np.broadcast_to(tb.next_f[iF, u], succ_d.shape)
    sup = tb.support[nextF]  # (..., u')
    dead = succ_d < 0
    succ_idx = np.where(dead, nd, succ_d)

    safe = np.zeros((nv, nv, nd, na), dtype=bool)
    safe[:, :, model.safe_gap:, :] = True
    iterations = 0
    while True:
        iterations += 1
        padded = np.concatenate([safe, np.zeros((nv, nv, 1, na), dtype=bool)], axis=2)
        nxt = padded[nextE, nextF, succ_idx]  # (iE, iF, d, u, c, u')
        succ_ok = np.where(sup, nxt, True).all(axis=-1) & ~dead
        allowed = min_ok & succ_ok & safe[..., None]
        new_safe = allowed.any(axis=-1)
        if np.array_equal(new_safe, safe):
            break
        safe = new_safe
    result = SafeSet(model, safe, allowed & safe[..., None], iterations)
    if check_initial:
        u0 = model.initial_front_mode
        for vE, vF, d in model.initial_states:
            if not result.contains(vE, vF, d, u0):
                raise UnsatisfiableError(f"initial state vE={vE} vF={vF} d={d} is not safe")
    return result


def build_mdp(model: CruiseModel, table: StrategyTable) -> FiniteMdp:
    """Explicit MDP over the configurations of ``table``, restricted to its allowed actions.

    The per-step cost is the successor's grid gap, FAR counting as ``sensor``.
    """
    tb = model.tables
    X = table.X
    iE = X[:, 0] - model.v_min
    iF = X[:, 1] - model.v_min
    d = X[:, 2]
    na = len(model.accels)
    n = len(table)
    succ = np.full((n, na, na), -1, dtype=np.int64)
    prob = np.zeros((n, na, na))
    cost = np.zeros((n, na, na))
    u = X[:, 3]
    far = d == model.far_code
    base = np.where(far, model.sensor, d).astype(float)
    nF_idx = tb.next_f[iF, u]
    for c in range(na):
        delta = tb.delta[iE, iF, c, u]
        nxt = base + delta
        code = np.floor(nxt).astype(np.int64)
        code = np.where(nxt > model.sensor, model.far_code, code)
        code = np.where(far & (delta >= 0), model.far_code, code)
        nE = tb.next_e[iE, c] + model.v_min
        for u2 in range(na):
            ok = tb.support[nF_idx, u2] & table.Y[:, c]
            cand = np.stack([nE, nF_idx + model.v_min, code, np.full(n, u2)], axis=1)
            rows = np.full(n, -1, dtype=np.int64)
            rows[ok] = table.locate(cand[ok])
            if (ok & (rows < 0)).any():
                bad = int(np.flatnonzero(ok & (rows < 0))[0])
                raise ValueError(
                    f"allowed action {table.actions[c]} at {table.config(bad)} leaves the table"
                )
            succ[ok, c, u2] = rows[ok]
            prob[ok, c, u2] = 1.0 / tb.support_size[nF_idx[ok]]
            cost[ok, c, u2] = np.minimum(code[ok], model.sensor)
    return FiniteMdp(succ, prob, cost, table.Y)


def optimize(model: CruiseModel, allowed, horizon: int | None = None, with_values: bool = False,
             domain=None):
    """Deterministic sub-strategy of ``allowed`` minimizing the expected summed gap.

    ``allowed`` is a SafeSet, a StrategyTable over the model's schema, or a
    DecisionTree read on ``domain`` (a table or code matrix; the whole grid
    by default).  Ties go to the first mode in alphabet order.
    """
    if isinstance(allowed, SafeSet):
        table = allowed.to_table()
    elif isinstance(allowed, DecisionTree):
        table = to_table(allowed, model.schema if domain is None else domain)
    else:
        table = allowed
    H = model.horizon if horizon is None else horizon
    mdp = build_mdp(model, table)
    V, policy = value_iteration(mdp, H)
    Y = np.zeros_like(table.Y)
    Y[np.arange(len(table)), policy] = True
    result = table.with_actions(Y)
    return (result, V) if with_values else result
