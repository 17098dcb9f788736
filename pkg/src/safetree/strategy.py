"""Configuration spaces, permissive strategy tables and their JSON-lines format.

A strategy file starts with a JSON header line::

    {"features": [{"name": "distance", "kind": "ordered", "min": 0, "max": 50}, ...],
     "actions": ["dec", "neu", "acc"]}

followed by one entry per line, ``{"c": [2, 51], "a": ["dec"]}``.

Internally a table keeps two numpy arrays: ``X`` holds one integer row per
configuration (categorical values replaced by their index in the feature's
value list) and ``Y`` is a boolean matrix with one column per action.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateConfigurationError,
    EmptyActionSetError,
    SchemaMismatchError,
    StrategyFormatError,
)

ORDERED = "ordered"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = ORDERED
    min: int | None = None
    max: int | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.kind == ORDERED:
            if self.min is None or self.max is None:
                raise ValueError(f"ordered feature {self.name!r} needs integer bounds")
            if int(self.min) != self.min or int(self.max) != self.max or self.min > self.max:
                raise ValueError(f"bad bounds for feature {self.name!r}")
            object.__setattr__(self, "min", int(self.min))
            object.__setattr__(self, "max", int(self.max))
        elif self.kind == CATEGORICAL:
            if not self.values:
                raise ValueError(f"categorical feature {self.name!r} needs values")
            values = tuple(self.values)
            if len(set(values)) != len(values):
                raise ValueError(f"duplicate values in feature {self.name!r}")
            object.__setattr__(self, "values", values)
        else:
            raise ValueError(f"unknown feature kind {self.kind!r}")

    @property
    def ordered(self) -> bool:
        return self.kind == ORDERED

    @property
    def width(self) -> int:
        """Number of distinct integer codes the feature can take."""
        if self.ordered:
            return self.max - self.min + 1
        return len(self.values)

    @property
    def code_min(self) -> int:
        return self.min if self.ordered else 0

    def encode(self, value):
        if self.ordered:
            return value
        try:
            return self.values.index(value)
        except ValueError:
            raise ValueError(f"{value!r} not in domain of {self.name!r}") from None

    def decode(self, code):
        if self.ordered:
            return int(code)
        return self.values[int(code)]

    def contains_code(self, code) -> bool:
        if self.ordered:
            return self.min <= code <= self.max
        return 0 <= code < len(self.values)

    def to_json(self) -> dict:
        if self.ordered:
            return {"name": self.name, "kind": self.kind, "min": self.min, "max": self.max}
        return {"name": self.name, "kind": self.kind, "values": list(self.values)}

    @classmethod
    def from_json(cls, obj: dict) -> "Feature":
        kind = obj.get("kind", ORDERED)
        if kind == CATEGORICAL:
            return cls(obj["name"], kind, values=tuple(obj["values"]))
        return cls(obj["name"], kind, obj["min"], obj["max"])


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError(f"feature names must be unique: {names}")

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def __getitem__(self, i) -> Feature:
        return self.features[i]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def encode(self, config: Sequence) -> tuple:
        if len(config) != len(self.features):
            raise SchemaMismatchError(
                f"configuration has {len(config)} values, schema has {len(self.features)}"
            )
        return tuple(f.encode(v) for f, v in zip(self.features, config))

    def decode(self, codes: Sequence) -> tuple:
        return tuple(f.decode(c) for f, c in zip(self.features, codes))

    def grid_size(self) -> int:
        n = 1
        for f in self.features:
            n *= f.width
        return n

    def grid(self, cap: int = 10**7) -> np.ndarray:
        """All integer configurations of the schema, as a code matrix."""
        n = self.grid_size()
        if n > cap:
            from .errors import GridTooLargeError

            raise GridTooLargeError(f"grid has {n} points, cap is {cap}")
        axes = [np.arange(f.code_min, f.code_min + f.width) for f in self.features]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)

    def linear_keys(self, X: np.ndarray) -> np.ndarray:
        """Mixed-radix key of each code row (unique per configuration)."""
        X = np.asarray(X, dtype=np.int64)
        key = np.zeros(len(X), dtype=np.int64)
        for j, f in enumerate(self.features):
            key = key * f.width + (X[:, j] - f.code_min)
        return key

    def to_json(self) -> list:
        return [f.to_json() for f in self.features]

    @classmethod
    def from_json(cls, objs: list) -> "FeatureSchema":
        return cls(tuple(Feature.from_json(o) for o in objs))


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class StrategyTable:
    """Finite map from integer configurations to non-empty sets of allowed actions."""

    def __init__(self, schema: FeatureSchema, actions: Sequence[str], X, Y, validate=True):
        self.schema = schema
        self.actions = tuple(actions)
        if len(set(self.actions)) != len(self.actions):
            raise ValueError("duplicate action names")
        X = np.asarray(X, dtype=np.int64).reshape(-1, len(schema))
        Y = np.asarray(Y, dtype=bool).reshape(len(X), len(self.actions))
        self.X = _readonly(X)
        self.Y = _readonly(Y)
        self._index = None
        if validate:
            self._validate()

    def _validate(self):
        if len(self.X) == 0:
            raise StrategyFormatError("empty strategy")
        for j, f in enumerate(self.schema):
            col = self.X[:, j]
            lo, hi = f.code_min, f.code_min + f.width - 1
            if col.min() < lo or col.max() > hi:
                raise StrategyFormatError(f"values of {f.name!r} outside domain")
        empty = ~self.Y.any(axis=1)
        if empty.any():
            row = int(np.flatnonzero(empty)[0])
            raise EmptyActionSetError(f"empty action set for {self.config(row)}")
        keys = self.schema.linear_keys(self.X)
        if len(np.unique(keys)) != len(keys):
            raise DuplicateConfigurationError("duplicate configuration in table")

    @classmethod
    def from_entries(cls, schema: FeatureSchema, actions: Sequence[str], entries: Iterable):
        """Build from ``(configuration, action names)`` pairs with raw feature values."""
        actions = tuple(actions)
        pos = {a: i for i, a in enumerate(actions)}
        X, Y = [], []
        for config, acts in entries:
            X.append(schema.encode(config))
            row = [False] * len(actions)
            for a in acts:
                row[pos[a]] = True
            Y.append(row)
        if not X:
            raise StrategyFormatError("empty strategy")
        return cls(schema, actions, X, Y)

    def __len__(self):
        return len(self.X)

    def config(self, row: int) -> tuple:
        return self.schema.decode(self.X[row])

    def action_set(self, row: int) -> frozenset:
        return frozenset(a for a, y in zip(self.actions, self.Y[row]) if y)

    def __iter__(self):
        for i in range(len(self)):
            yield self.config(i), self.action_set(i)

    def locate(self, X) -> np.ndarray:
        """Row index for each code row of ``X``; -1 where the configuration is absent."""
        if self._index is None:
            keys = self.schema.linear_keys(self.X)
            order = np.argsort(keys, kind="stable")
            self._index = (keys[order], order)
        sorted_keys, order = self._index
        X = np.asarray(X, dtype=np.int64).reshape(-1, len(self.schema))
        inside = np.ones(len(X), dtype=bool)
        for j, f in enumerate(self.schema):
            inside &= (X[:, j] >= f.code_min) & (X[:, j] < f.code_min + f.width)
        keys = self.schema.linear_keys(np.where(inside[:, None], X, self._lo_codes()))
        pos = np.searchsorted(sorted_keys, keys)
        pos = np.minimum(pos, len(sorted_keys) - 1)
        hit = inside & (sorted_keys[pos] == keys)
        return np.where(hit, order[pos], -1)

    def _lo_codes(self):
        return np.array([f.code_min for f in self.schema], dtype=np.int64)

    def __getitem__(self, config) -> frozenset:
        row = self.locate([self.schema.encode(config)])[0]
        if row < 0:
            raise KeyError(config)
        return self.action_set(row)

    def __contains__(self, config) -> bool:
        try:
            return self.locate([self.schema.encode(config)])[0] >= 0
        except ValueError:
            return False

    def _canonical(self):
        order = np.argsort(self.schema.linear_keys(self.X), kind="stable")
        return self.X[order], self.Y[order]

    def __eq__(self, other):
        if not isinstance(other, StrategyTable):
            return NotImplemented
        if self.schema != other.schema or self.actions != other.actions or len(self) != len(other):
            return False
        (xa, ya), (xb, yb) = self._canonical(), other._canonical()
        return bool(np.array_equal(xa, xb) and np.array_equal(ya, yb))

    def __repr__(self):
        return f"StrategyTable({len(self)} entries, features={self.schema.names}, actions={list(self.actions)})"

    def with_actions(self, Y) -> "StrategyTable":
        """Same configurations, new allowed-action matrix."""
        return StrategyTable(self.schema, self.actions, self.X, Y)

    def permuted(self, perm) -> "StrategyTable":
        return StrategyTable(self.schema, self.actions, self.X[perm], self.Y[perm], validate=False)


def save_strategy(table: StrategyTable, path) -> None:
    header = {"features": table.schema.to_json(), "actions": list(table.actions)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for i in range(len(table)):
            entry = {
                "c": list(table.config(i)),
                "a": [a for a, y in zip(table.actions, table.Y[i]) if y],
            }
            fh.write(json.dumps(entry, separators=(",", ":")) + "\n")


def load_strategy(path) -> StrategyTable:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise StrategyFormatError("missing header", 1)
    try:
        header = json.loads(lines[0])
        schema = FeatureSchema.from_json(header["features"])
        actions = tuple(header["actions"])
    except (ValueError, KeyError, TypeError) as exc:
        raise StrategyFormatError(f"bad header: {exc}", 1) from None
    pos = {a: i for i, a in enumerate(actions)}
    seen = {}
    X = np.empty((len(lines) - 1, len(schema)), dtype=np.int64)
    Y = np.zeros((len(lines) - 1, len(actions)), dtype=bool)
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        try:
            obj = json.loads(line)
            config, acts = obj["c"], obj["a"]
        except (ValueError, KeyError, TypeError) as exc:
            raise StrategyFormatError(f"bad entry: {exc}", lineno) from None
        try:
            codes = schema.encode(config)
        except (ValueError, SchemaMismatchError) as exc:
            raise StrategyFormatError(str(exc), lineno) from None
        for f, c in zip(schema, codes):
            if not isinstance(c, (int, np.integer)) or isinstance(c, bool) or not f.contains_code(c):
                raise StrategyFormatError(f"value {c!r} outside domain of {f.name!r}", lineno)
        if codes in seen:
            raise DuplicateConfigurationError(
                f"configuration {list(config)} repeats line {seen[codes]}", lineno
            )
        seen[codes] = lineno
        if not acts:
            raise EmptyActionSetError(f"empty action set for {list(config)}", lineno)
        for a in acts:
            if a not in pos:
                raise StrategyFormatError(f"unknown action {a!r}", lineno)
            Y[i, pos[a]] = True
        X[i] = codes
    if len(X) == 0:
        raise StrategyFormatError("empty strategy")
    return StrategyTable(schema, actions, X, Y, validate=False)


def restrict(table: StrategyTable, sub: StrategyTable) -> bool:
    """True iff ``sub`` is a sub-strategy of ``table``.

    Every configuration of ``sub`` must appear in ``table`` and its allowed set
    must be a non-empty subset of the one in ``table``.
    """
    if table.schema != sub.schema or table.actions != sub.actions:
        raise SchemaMismatchError("tables are over different schemas or alphabets")
    rows = table.locate(sub.X)
    if (rows < 0).any():
        return False
    big = table.Y[rows]
    return bool(sub.Y.any(axis=1).all() and not (sub.Y & ~big).any())
