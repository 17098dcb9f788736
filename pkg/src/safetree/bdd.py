"""Reduced ordered BDDs for bit-blasted strategies, with Rudell sifting.

Plain ROBDDs: no complement edges.  Node 0 is the constant false, node 1 the
constant true.  Internal nodes are hash-consed per variable and reference
counted, so the number of live nodes is exact after every level swap; that
is what sifting minimizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError
from .strategy import StrategyTable

FALSE = 0
TRUE = 1


class Bdd:
    """Shared node table over ``nvars`` variables plus a list of root nodes."""

    def __init__(self, nvars: int, order: Sequence[int] | None = None, names: Sequence[str] | None = None,
                 capacity: int | None = None):
        self.nvars = nvars
        order = list(range(nvars)) if order is None else list(order)
        if sorted(order) != list(range(nvars)):
            raise ValueError("order must be a permutation of the variables")
        self.var_at_level = order
        self.level_of = [0] * nvars
        for lvl, v in enumerate(order):
            self.level_of[v] = lvl
        self.names = list(names) if names is not None else [f"v{i}" for i in range(nvars)]
        self.capacity = capacity
        self._var = [nvars, nvars]
        self._hi = [-1, -1]
        self._lo = [-1, -1]
        self._ref = [1, 1]
        self._unique: list[dict] = [dict() for _ in range(nvars)]
        self._free: list[int] = []
        self.live = 0
        self.roots: list[int] = []

    # node table -------------------------------------------------------

    def level(self, u: int) -> int:
        v = self._var[u]
        return self.nvars if v == self.nvars else self.level_of[v]

    def var(self, u: int) -> int:
        return self._var[u]

    def high(self, u: int) -> int:
        return self._hi[u]

    def low(self, u: int) -> int:
        return self._lo[u]

    def mk(self, v: int, hi: int, lo: int) -> int:
        if hi == lo:
            return hi
        table = self._unique[v]
        u = table.get((hi, lo))
        if u is not None:
            return u
        if self._free:
            u = self._free.pop()
            self._var[u], self._hi[u], self._lo[u], self._ref[u] = v, hi, lo, 0
        else:
            u = len(self._var)
            self._var.append(v)
            self._hi.append(hi)
            self._lo.append(lo)
            self._ref.append(0)
        table[(hi, lo)] = u
        self._ref[hi] += 1
        self._ref[lo] += 1
        self.live += 1
        if self.capacity is not None and self.live > self.capacity:
            raise CapacityError(f"node table exceeded {self.capacity} nodes")
        return u

    def _kill(self, u: int):
        stack = [u]
        while stack:
            u = stack.pop()
            if u <= TRUE or self._ref[u] != 0 or self._var[u] < 0:
                continue
            v, hi, lo = self._var[u], self._hi[u], self._lo[u]
            del self._unique[v][(hi, lo)]
            self._var[u] = -1
            self._free.append(u)
            self.live -= 1
            for c in (hi, lo):
                self._ref[c] -= 1
                if self._ref[c] == 0:
                    stack.append(c)

    def add_root(self, u: int) -> int:
        self._ref[u] += 1
        self.roots.append(u)
        return u

    def collect(self):
        """Drop every node not reachable from a root."""
        for v in range(self.nvars):
            for u in list(self._unique[v].values()):
                if self._ref[u] == 0:
                    self._kill(u)

    @property
    def root(self) -> int:
        return self.roots[0]

    def copy(self) -> "Bdd":
        other = Bdd.__new__(Bdd)
        other.nvars = self.nvars
        other.var_at_level = list(self.var_at_level)
        other.level_of = list(self.level_of)
        other.names = list(self.names)
        other.capacity = self.capacity
        other._var, other._hi, other._lo = list(self._var), list(self._hi), list(self._lo)
        other._ref = list(self._ref)
        other._unique = [dict(t) for t in self._unique]
        other._free = list(self._free)
        other.live = self.live
        other.roots = list(self.roots)
        return other

    # construction -----------------------------------------------------

    def variable(self, v: int) -> int:
        return self.mk(v, TRUE, FALSE)

    def apply(self, op: str, f: int, g: int) -> int:
        ops = {
            "and": lambda a, b: a & b,
            "or": lambda a, b: a | b,
            "xor": lambda a, b: a ^ b,
        }
        fn = ops[op]
        memo: dict = {}

        def rec(f, g):
            if f <= TRUE and g <= TRUE:
                return fn(f, g)
            key = (f, g)
            if key in memo:
                return memo[key]
            lf, lg = self.level(f), self.level(g)
            lvl = min(lf, lg)
            v = self.var_at_level[lvl]
            f1, f0 = (self._hi[f], self._lo[f]) if lf == lvl else (f, f)
            g1, g0 = (self._hi[g], self._lo[g]) if lg == lvl else (g, g)
            r = self.mk(v, rec(f1, g1), rec(f0, g0))
            memo[key] = r
            return r

        return rec(f, g)

    def neg(self, f: int) -> int:
        return self.apply("xor", f, TRUE)

    def from_assignments(self, bits) -> int:
        """BDD of the disjunction of the given minterms (rows over variable indices)."""
        bits = np.asarray(bits, dtype=np.int64).reshape(-1, self.nvars)
        if len(bits) == 0:
            return FALSE
        if self.nvars > 62:
            raise ValueError("from_assignments packs assignments into 64-bit keys")
        by_level = bits[:, self.var_at_level]
        keys = np.zeros(len(bits), dtype=np.int64)
        for lvl in range(self.nvars):
            keys = (keys << 1) | by_level[:, lvl]
        child_keys = np.unique(keys)
        child_ids = np.full(len(child_keys), TRUE, dtype=np.int64)
        for lvl in range(self.nvars - 1, -1, -1):
            parent = child_keys >> 1
            bit = child_keys & 1
            pkeys, pidx = np.unique(parent, return_inverse=True)
            hi = np.zeros(len(pkeys), dtype=np.int64)
            lo = np.zeros(len(pkeys), dtype=np.int64)
            hi[pidx[bit == 1]] = child_ids[bit == 1]
            lo[pidx[bit == 0]] = child_ids[bit == 0]
            v = self.var_at_level[lvl]
            ids = np.empty(len(pkeys), dtype=np.int64)
            for i, (h, l) in enumerate(zip(hi.tolist(), lo.tolist())):
                ids[i] = self.mk(v, h, l)
            child_keys, child_ids = pkeys, ids
        return int(child_ids[0])

    # evaluation -------------------------------------------------------

    def evaluate(self, u: int, assignment) -> bool:
        while u > TRUE:
            u = self._hi[u] if assignment[self._var[u]] else self._lo[u]
        return u == TRUE

    def evaluate_many(self, u: int, bits) -> np.ndarray:
        bits = np.asarray(bits).reshape(-1, self.nvars).astype(bool)
        var = np.array(self._var)
        hi = np.array(self._hi)
        lo = np.array(self._lo)
        node = np.full(len(bits), u, dtype=np.int64)
        rows = np.arange(len(bits))
        active = rows[node > TRUE]
        while len(active):
            cur = node[active]
            node[active] = np.where(bits[active, var[cur]], hi[cur], lo[cur])
            active = active[node[active] > TRUE]
        return node == TRUE

    def truth_table(self, u: int | None = None) -> np.ndarray:
        """Values on all 2**nvars assignments; assignment ``a`` sets variable ``i`` to bit ``i`` of ``a``."""
        if self.nvars > 24:
            raise ValueError("truth table too large")
        u = self.root if u is None else u
        a = np.arange(2**self.nvars, dtype=np.int64)
        bits = (a[:, None] >> np.arange(self.nvars)) & 1
        return self.evaluate_many(u, bits)

    def reachable(self, u: int | None = None) -> set:
        roots = [self.root] if u is None else [u]
        seen, stack = set(), list(roots)
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            if x > TRUE:
                stack.append(self._hi[x])
                stack.append(self._lo[x])
        return seen

    def check(self):
        """Assert reducedness, ordering and hash-consing of the live node table."""
        for v in range(self.nvars):
            for (hi, lo), u in self._unique[v].items():
                assert self._var[u] == v and self._hi[u] == hi and self._lo[u] == lo
                assert hi != lo
                assert self.level(hi) > self.level_of[v] and self.level(lo) > self.level_of[v]

    # reordering -------------------------------------------------------

    def swap(self, lvl: int):
        """Exchange the variables at levels ``lvl`` and ``lvl + 1`` in place."""
        x = self.var_at_level[lvl]
        y = self.var_at_level[lvl + 1]
        old_y = list(self._unique[y].values())
        hi_, lo_, var_, ref_ = self._hi, self._lo, self._var, self._ref
        for f in list(self._unique[x].values()):
            f1, f0 = hi_[f], lo_[f]
            if var_[f1] != y and var_[f0] != y:
                continue
            f11, f10 = (hi_[f1], lo_[f1]) if var_[f1] == y else (f1, f1)
            f01, f00 = (hi_[f0], lo_[f0]) if var_[f0] == y else (f0, f0)
            del self._unique[x][(f1, f0)]
            new_hi = self.mk(x, f11, f01)
            new_lo = self.mk(x, f10, f00)
            ref_[new_hi] += 1
            ref_[new_lo] += 1
            ref_[f1] -= 1
            ref_[f0] -= 1
            var_[f], hi_[f], lo_[f] = y, new_hi, new_lo
            self._unique[y][(new_hi, new_lo)] = f
        self.var_at_level[lvl], self.var_at_level[lvl + 1] = y, x
        self.level_of[x], self.level_of[y] = lvl + 1, lvl
        for u in old_y:
            if ref_[u] == 0 and var_[u] == y:
                self._kill(u)

    def sift(self, max_swaps: int | None = None):
        """Rudell sifting: move each variable through every level, keep the best."""
        self.collect()
        n = self.nvars
        if n < 2:
            return self
        counts = [len(self._unique[v]) for v in range(n)]
        for v in sorted(range(n), key=lambda v: -counts[v]):
            start = self.level_of[v]
            best_size, best_level = self.live, start
            # visit the nearer end first
            ends = [n - 1, 0] if (n - 1 - start) <= start else [0, n - 1]
            for end in ends:
                while self.level_of[v] != end:
                    lvl = self.level_of[v]
                    if end > lvl:
                        self.swap(lvl)
                    else:
                        self.swap(lvl - 1)
                    if self.live < best_size:
                        best_size, best_level = self.live, self.level_of[v]
            while self.level_of[v] != best_level:
                lvl = self.level_of[v]
                if best_level > lvl:
                    self.swap(lvl)
                else:
                    self.swap(lvl - 1)
        return self


def sift_reorder(bdd: Bdd) -> Bdd:
    """Function-equivalent copy of ``bdd`` after one sifting pass."""
    return bdd.copy().sift()


def bdd_size(bdd: Bdd, root: int | None = None, terminals: bool = True) -> int:
    """Nodes reachable from the root; terminals are counted unless ``terminals`` is False."""
    nodes = bdd.reachable(root)
    if terminals:
        return len(nodes)
    return sum(1 for u in nodes if u > TRUE)


# bit-blasting -----------------------------------------------------------


@dataclass(frozen=True)
class BitEncoding:
    """Bit layout: per feature (name, width, offset); actions one-hot or binary."""

    features: tuple[tuple[str, int, int], ...]
    actions: tuple[str, ...]
    action_mode: str = "one-hot"

    @classmethod
    def for_schema(cls, schema, actions, action_mode="one-hot") -> "BitEncoding":
        feats = []
        for f in schema:
            width = max(1, (f.width - 1).bit_length())
            feats.append((f.name, width, -f.code_min))
        return cls(tuple(feats), tuple(actions), action_mode)

    @property
    def action_bits(self) -> int:
        if self.action_mode == "one-hot":
            return len(self.actions)
        return max(1, (len(self.actions) - 1).bit_length())

    @property
    def nvars(self) -> int:
        return sum(w for _, w, _ in self.features) + self.action_bits

    @property
    def names(self) -> list[str]:
        out = []
        for name, width, _ in self.features:
            out.extend(f"{name}{b}" for b in range(width - 1, -1, -1))
        prefix = "a" if self.action_mode == "one-hot" else "act"
        out.extend(f"{prefix}{i}" for i in range(self.action_bits))
        return out

    def config_bits(self, X) -> np.ndarray:
        """Bit matrix (msb first per feature) of integer code rows."""
        X = np.asarray(X, dtype=np.int64).reshape(-1, len(self.features))
        cols = []
        for j, (name, width, offset) in enumerate(self.features):
            val = X[:, j] + offset
            if (val < 0).any() or (val >= 2**width).any():
                raise ValueError(f"value of {name!r} outside its {width}-bit range")
            for b in range(width - 1, -1, -1):
                cols.append((val >> b) & 1)
        return np.stack(cols, axis=1) if cols else np.zeros((len(X), 0), dtype=np.int64)

    def action_bits_of(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64).reshape(-1)
        if self.action_mode == "one-hot":
            return (idx[:, None] == np.arange(len(self.actions))).astype(np.int64)
        return (idx[:, None] >> np.arange(self.action_bits)) & 1

    def pair_bits(self, X, action_idx) -> np.ndarray:
        return np.hstack([self.config_bits(X), self.action_bits_of(action_idx)])


def encode_pair(enc: BitEncoding, codes, action) -> tuple[tuple[str, bool], ...]:
    """Minterm of one (configuration, action) pair as ``(variable name, polarity)`` literals."""
    a = enc.actions.index(action) if isinstance(action, str) else int(action)
    bits = enc.pair_bits([codes], [a])[0]
    return tuple((name, bool(b)) for name, b in zip(enc.names, bits))


def format_minterm(literals) -> str:
    return " ∧ ".join(name if val else f"¬{name}" for name, val in literals)


def build_strategy_bdd(table: StrategyTable, enc: BitEncoding | None = None, order=None,
                       capacity: int | None = None) -> Bdd:
    """BDD true exactly on the encoded (configuration, allowed action) pairs."""
    if enc is None:
        enc = BitEncoding.for_schema(table.schema, table.actions)
    bdd = Bdd(enc.nvars, order, enc.names, capacity)
    rows, acts = np.nonzero(table.Y)
    bits = enc.pair_bits(table.X[rows], acts) if len(rows) else np.zeros((0, enc.nvars))
    bdd.add_root(bdd.from_assignments(bits))
    bdd.encoding = enc
    return bdd


def random_order_sizes(table: StrategyTable, R: int, seed=0, enc: BitEncoding | None = None) -> list[int]:
    """Sifted BDD sizes for ``R`` random initial variable orders."""
    if enc is None:
        enc = BitEncoding.for_schema(table.schema, table.actions)
    rng = np.random.default_rng(seed)
    sizes = []
    for _ in range(R):
        order = rng.permutation(enc.nvars).tolist()
        bdd = build_strategy_bdd(table, enc, order)
        bdd.sift()
        sizes.append(bdd_size(bdd))
    return sizes
