"""Export a decision tree as nested-if C code, plus a tiny interpreter for it.

The generated function takes every feature as an ``int`` and returns the
first pure action (in alphabet order) of the leaf it reaches.  Ordered
thresholds are rounded down to integers, which is exact for integer inputs;
the original real threshold is kept in a comment.  Categorical features with
non-integer values are passed as their index in the value list.
"""

from __future__ import annotations

import math
import re

from .tree import EQ, DecisionTree, Inner

_INDENT = "    "


def _ident(name: str, prefix: str) -> str:
    s = re.sub(r"\W", "_", name)
    if not s or s[0].isdigit():
        s = prefix + s
    return s


def _action_names(actions) -> list[str]:
    names, seen = [], set()
    for i, a in enumerate(actions):
        s = _ident(a, "A_").upper()
        if s in seen:
            s = f"{s}_{i}"
        seen.add(s)
        names.append(s)
    return names


def export_code(tree: DecisionTree, dialect: str = "c-like", function_name: str = "controller") -> str:
    if dialect != "c-like":
        raise ValueError(f"unsupported dialect {dialect!r}")
    consts = _action_names(tree.actions)
    params = [_ident(f.name, "f_") for f in tree.schema]
    lines = [
        f"/* decision tree controller: {tree.size} nodes */",
        "enum action { " + ", ".join(f"{c} = {i}" for i, c in enumerate(consts)) + " };",
        "",
        f"int {function_name}(" + ", ".join(f"int {p}" for p in params) + ")",
        "{",
    ]

    def condition(pred):
        f = tree.schema[pred.feature]
        var = params[pred.feature]
        if pred.rel == EQ:
            value = pred.threshold
            if isinstance(value, int) and not isinstance(value, bool):
                return f"{var} == {value}", None
            return f"{var} == {f.encode(value)}", f"{f.name} == {value!r}"
        thr = float(pred.threshold)
        scaled = math.floor(thr)
        note = None if thr == scaled else f"{f.name} <= {thr:g}"
        return f"{var} <= {scaled}", note

    def emit(i, depth):
        pad = _INDENT * depth
        node = tree.nodes[i]
        if not isinstance(node, Inner):
            mask = node.stats.pure_mask
            first = mask.index(True)
            lines.append(f"{pad}return {consts[first]};")
            return
        cond, note = condition(node.predicate)
        lines.append(f"{pad}if ({cond}) {{" + (f" /* {note} */" if note else ""))
        emit(node.left, depth + 1)
        lines.append(f"{pad}}} else {{")
        emit(node.right, depth + 1)
        lines.append(f"{pad}}}")

    emit(0, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"


# interpreter ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(/\*.*?\*/)|(<=|==|[{}();,=])|(-?\d+)|([A-Za-z_]\w*))", re.S)


def _tokenize(src: str) -> list:
    pos, out = 0, []
    src = src.rstrip()
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise SyntaxError(f"unexpected input at offset {pos}: {src[pos:pos + 20]!r}")
        pos = m.end()
        if m.group(1):
            continue
        if m.group(2):
            out.append(("op", m.group(2)))
        elif m.group(3):
            out.append(("int", int(m.group(3))))
        else:
            out.append(("id", m.group(4)))
    return out


class CompiledController:
    """Evaluates source produced by :func:`export_code` without touching the tree."""

    def __init__(self, source: str):
        self._toks = _tokenize(source)
        self._i = 0
        self.enum: dict[str, int] = {}
        self._parse_enum()
        self._expect("id", "int")
        self.name = self._next("id")
        self.params = self._parse_params()
        self.body = self._parse_block()

    def _peek(self):
        return self._toks[self._i] if self._i < len(self._toks) else (None, None)

    def _next(self, kind=None):
        tok = self._peek()
        if kind is not None and tok[0] != kind:
            raise SyntaxError(f"expected {kind}, got {tok}")
        self._i += 1
        return tok[1]

    def _expect(self, kind, value):
        got = self._next(kind)
        if got != value:
            raise SyntaxError(f"expected {value!r}, got {got!r}")

    def _parse_enum(self):
        self._expect("id", "enum")
        self._next("id")
        self._expect("op", "{")
        while True:
            name = self._next("id")
            self._expect("op", "=")
            self.enum[name] = self._next("int")
            if self._next("op") == "}":
                break
        self._expect("op", ";")

    def _parse_params(self):
        self._expect("op", "(")
        params = []
        while True:
            self._expect("id", "int")
            params.append(self._next("id"))
            if self._next("op") == ")":
                return params

    def _parse_block(self):
        self._expect("op", "{")
        stmt = self._parse_stmt()
        self._expect("op", "}")
        return stmt

    def _parse_stmt(self):
        word = self._next("id")
        if word == "return":
            name = self._next("id")
            self._expect("op", ";")
            return ("return", self.enum[name])
        if word != "if":
            raise SyntaxError(f"unexpected statement {word!r}")
        self._expect("op", "(")
        var = self._next("id")
        op = self._next("op")
        value = self._next("int")
        self._expect("op", ")")
        then = self._parse_block()
        self._expect("id", "else")
        other = self._parse_block()
        return ("if", var, op, value, then, other)

    def __call__(self, *args, **kwargs) -> int:
        env = dict(zip(self.params, args))
        env.update(kwargs)
        stmt = self.body
        while stmt[0] == "if":
            _, var, op, value, then, other = stmt
            x = env[var]
            ok = x <= value if op == "<=" else x == value
            stmt = then if ok else other
        return stmt[1]


def interpret(source: str) -> CompiledController:
    return CompiledController(source)
