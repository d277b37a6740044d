"""Expression language for metric components and scalar fields.

Grammar (standard math precedence, ``^`` right-associative and binding
tighter than unary minus)::

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
           | 'diff' '(' expr ',' IDENT ')'

``diff(e, x)`` is the partial derivative of ``e`` along coordinate ``x``.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, MetricFileError, ParseError
from .jets import Jet, jet_apply, lift_variable

FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos", "tan", "atan", "sinh", "cosh", "tanh", "sign")
ALIASES = {"csgn": "sign"}


# --- expression tree ------------------------------------------------------


class Expr:
    """Base class of expression nodes.  Nodes are immutable."""

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return Bin("^", self, as_expr(other))

    def __neg__(self):
        if isinstance(self, Num):
            return Num(-self.value)
        return Neg(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True, repr=True)
class Num(Expr):
    value: float | complex


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr


@dataclass(frozen=True)
class Deriv(Expr):
    """Partial derivative of ``arg`` along coordinate ``var``; written ``diff(arg, var)``."""

    arg: Expr
    var: str


ZERO = Num(0.0)
ONE = Num(1.0)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return parse_expr(x)
    return Num(x)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0


def add(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return Bin("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if is_zero(b):
        return a
    if is_zero(a):
        return -b
    return Bin("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if is_zero(a) or is_zero(b):
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Bin("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return ZERO
    if b == ONE:
        return a
    return Bin("/", a, b)


def call(fn: str, arg) -> Expr:
    return Call(ALIASES.get(fn, fn), as_expr(arg))


def diff(e: Expr, var: str) -> Expr:
    if isinstance(e, Num):
        return ZERO
    return Deriv(e, var)


def free_names(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            out.add(n.name)
        elif isinstance(n, Neg):
            stack.append(n.arg)
        elif isinstance(n, Bin):
            stack.extend((n.left, n.right))
        elif isinstance(n, Call):
            stack.append(n.arg)
        elif isinstance(n, Deriv):
            out.add(n.var)
            stack.append(n.arg)
    return out


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace identifiers by expressions (used for coordinate relabeling)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Bin):
        return Bin(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.fn, substitute(e.arg, mapping))
    if isinstance(e, Deriv):
        target = mapping.get(e.var)
        if target is not None and not isinstance(target, Var):
            raise ValueError(f"cannot substitute derivative variable {e.var} by {target}")
        return Deriv(substitute(e.arg, mapping), target.name if target is not None else e.var)
    return e


# --- parser ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    # offsets are reported in bytes
    byte_offset = lambda i: len(text[:i].encode("utf-8"))
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + (len(rest) - len(rest.lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", byte_offset(bad))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), byte_offset(m.start(kind))))
        pos = m.end()
    tokens.append(("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value or kind == "end":
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", off)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Bin(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Bin(op, e, self.unary())
        return e

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if self.peek()[:2] == ("op", "(") and text == "diff":
                self.take()
                arg = self.expr()
                self.expect(",")
                vkind, var, voff = self.take()
                if vkind != "ident":
                    raise ParseError(f"diff needs a coordinate name, found {var or 'end of input'!r}", voff)
                self.expect(")")
                return Deriv(arg, var)
            if self.peek()[:2] == ("op", "("):
                name = ALIASES.get(text, text)
                if name not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", off)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            return Var(text)
        if (kind, text) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {text or 'end of input'!r}", off)


def parse_expr(text: str) -> Expr:
    """Parse an expression; raises :class:`ParseError` with a byte offset."""
    return _Parser(text).parse()


# --- printer --------------------------------------------------------------


def to_text(e: Expr) -> str:
    """Fully parenthesized text that parses back to an equivalent tree."""
    if isinstance(e, Num):
        v = e.value
        if isinstance(v, complex) or np.iscomplexobj(v):
            raise ValueError("complex constants have no textual form")
        v = float(v)
        s = repr(v)
        if s in ("inf", "-inf", "nan"):
            raise ValueError(f"cannot print non-finite constant {s}")
        return f"({s})" if v < 0 or s.startswith("-") else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, Bin):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({to_text(e.arg)})"
    if isinstance(e, Deriv):
        return f"diff({to_text(e.arg)}, {e.var})"
    raise TypeError(f"not an expression: {e!r}")


# --- evaluation -----------------------------------------------------------


class UnboundIdentifierError(EvaluationError):
    def __init__(self, name: str):
        super().__init__(f"unbound identifier {name!r}")
        self.name = name


class Evaluator:
    """Evaluates expressions on jets of the coordinate functions at one point.

    Results are memoized per node, so evaluating several components that share
    subtrees (as the connection expressions of an extension do) costs each
    subtree once.
    """

    def __init__(self, coords, point, order: int, params: Mapping[str, float] | None = None):
        self.coords = tuple(coords)
        self.point = tuple(point)
        if len(self.coords) != len(self.point):
            raise ValueError(f"point has {len(self.point)} entries for {len(self.coords)} coordinates")
        self.order = order
        self.params = dict(params or {})
        self._lifts: dict[int, dict[str, Jet]] = {}
        self._memo: dict[tuple[int, int], tuple[Expr, Jet]] = {}

    def bindings(self, order: int) -> dict[str, Jet]:
        if order not in self._lifts:
            n = len(self.coords)
            self._lifts[order] = {
                c: lift_variable(float(v), i, n, order) for i, (c, v) in enumerate(zip(self.coords, self.point))
            }
        return self._lifts[order]

    def constant(self, value, order: int) -> Jet:
        return Jet.constant(value, len(self.coords), order)

    def __call__(self, e: Expr, order: int | None = None) -> Jet:
        return self.eval(e, self.order if order is None else order)

    def eval(self, e: Expr, order: int) -> Jet:
        key = (id(e), order)
        hit = self._memo.get(key)
        if hit is not None and hit[0] is e:
            return hit[1]
        val = self._eval(e, order)
        self._memo[key] = (e, val)
        return val

    def _eval(self, e: Expr, order: int) -> Jet:
        if isinstance(e, Num):
            return self.constant(e.value, order)
        if isinstance(e, Var):
            b = self.bindings(order)
            if e.name in b:
                return b[e.name]
            if e.name in self.params:
                return self.constant(self.params[e.name], order)
            raise UnboundIdentifierError(e.name)
        if isinstance(e, Neg):
            return -self.eval(e.arg, order)
        if isinstance(e, Bin):
            a = self.eval(e.left, order)
            if e.op == "^":
                return _power(a, e.right, self, order)
            b = self.eval(e.right, order)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                if b.value == 0:
                    raise EvaluationError("division by an expression that vanishes at the point")
                return a / b
            raise ValueError(f"unknown operator {e.op!r}")
        if isinstance(e, Call):
            return jet_apply(e.fn, self.eval(e.arg, order))
        if isinstance(e, Deriv):
            if e.var not in self.coords:
                raise UnboundIdentifierError(e.var)
            inner = self.eval(e.arg, order + 1)
            return inner.derivative(self.coords.index(e.var))
        raise TypeError(f"not an expression: {e!r}")


def _power(base: Jet, exponent: Expr, ev: Evaluator, order: int) -> Jet:
    ex = ev.eval(exponent, order)
    if ex.is_constant():
        return base**ex.value
    return base**ex


def eval_expr(e: Expr, bindings: Mapping[str, Jet], params: Mapping[str, float] | None = None) -> Jet:
    """Evaluate ``e`` with identifiers bound to jets (coordinates) or reals (params).

    Derivative nodes require the bindings to be plain coordinate lifts.
    """
    bindings = dict(bindings)
    params = dict(params or {})
    if not bindings:
        nv, order = 1, 0
    else:
        first = next(iter(bindings.values()))
        nv, order = first.nvars, first.order
    ev = _BoundEvaluator(bindings, nv, order, params)
    return ev(e)


class _BoundEvaluator(Evaluator):
    """Evaluator over caller-supplied jets instead of self-made coordinate lifts."""

    def __init__(self, bindings: dict[str, Jet], nvars: int, order: int, params):
        self._given = bindings
        self._nvars = nvars
        names = list(bindings)
        point = [float(np.real(j.value)) for j in bindings.values()]
        super().__init__(names, point, order, params)

    def constant(self, value, order: int) -> Jet:
        return Jet.constant(value, self._nvars, order)

    def bindings(self, order: int) -> dict[str, Jet]:
        if order == self.order:
            return self._given
        axes = {}
        for name, j in self._given.items():
            first = j.coeffs[1 : 1 + j.nvars] if j.order >= 1 else np.zeros(j.nvars)
            rest = j.coeffs[1 + j.nvars :]
            hits = np.flatnonzero(first)
            if len(hits) != 1 or first[hits[0]] != 1 or np.any(rest):
                raise EvaluationError(f"binding {name!r} is not a coordinate lift; cannot differentiate")
            axes[name] = (float(np.real(j.value)), int(hits[0]))
        return {n: lift_variable(v, ax, self._nvars, order) for n, (v, ax) in axes.items()}

    def _eval(self, e, order):
        if isinstance(e, Deriv):
            if e.var not in self._given:
                raise UnboundIdentifierError(e.var)
            j = self._given[e.var]
            ax = int(np.flatnonzero(j.coeffs[1 : 1 + j.nvars])[0])
            inner = self.eval(e.arg, order + 1)
            return inner.derivative(ax)
        return super()._eval(e, order)


def eval_float(e: Expr, values: Mapping[str, float], params: Mapping[str, float] | None = None) -> float:
    """Plain value of an expression (order-0 jets)."""
    names = list(values)
    if not names:
        names, pt = ["_"], [0.0]
    else:
        pt = [values[n] for n in names]
    return Evaluator(names, pt, 0, params)(e).value


# --- metric files ---------------------------------------------------------


@dataclass(frozen=True)
class MetricSpec:
    """Symmetric matrix of component expressions over named coordinates."""

    coords: tuple[str, ...]
    g: tuple[tuple[Expr, ...], ...]
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.coords)
        if n not in (3, 6):
            raise ValueError(f"metric dimension must be 3 or 6, got {n}")
        if len(self.g) != n or any(len(row) != n for row in self.g):
            raise ValueError("metric matrix is not square with the coordinate count")
        rows = [list(r) for r in self.g]
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    if is_zero(rows[j][i]):
                        rows[j][i] = rows[i][j]
                    elif is_zero(rows[i][j]):
                        rows[i][j] = rows[j][i]
                    else:
                        raise ValueError(f"metric entries ({i},{j}) and ({j},{i}) differ")
        object.__setattr__(self, "g", tuple(tuple(as_expr(c) for c in r) for r in rows))
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "coords", tuple(self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @classmethod
    def from_components(cls, coords, entries: Mapping[tuple[int, int], object], params=None) -> MetricSpec:
        """Build from a sparse ``{(i, j): expr}`` map (0-based, one triangle suffices)."""
        n = len(coords)
        g = [[ZERO] * n for _ in range(n)]
        for (i, j), e in entries.items():
            g[i][j] = g[j][i] = as_expr(e)
        return cls(tuple(coords), tuple(tuple(r) for r in g), params or {})

    @classmethod
    def diagonal(cls, coords, diag, params=None) -> MetricSpec:
        return cls.from_components(coords, {(i, i): d for i, d in enumerate(diag)}, params)

    def is_diagonal(self) -> bool:
        return all(is_zero(self.g[i][j]) for i in range(self.dim) for j in range(self.dim) if i != j)

    def evaluate(self, point, order: int, params: Mapping[str, float] | None = None, evaluator=None) -> np.ndarray:
        """Jet coefficients of all components, shape ``(n, n, N)``."""
        ev = evaluator or Evaluator(self.coords, point, order, {**self.params, **(params or {})})
        n = self.dim
        out = None
        for i in range(n):
            for j in range(i, n):
                c = ev(self.g[i][j], order).coeffs
                if out is None:
                    out = np.zeros((n, n, c.shape[-1]), dtype=c.dtype)
                elif np.iscomplexobj(c) and not np.iscomplexobj(out):
                    out = out.astype(complex)
                out[i, j] = c
                out[j, i] = c
        return out

    def relabel(self, mapping: Mapping[str, str]) -> MetricSpec:
        sub_map = {k: Var(v) for k, v in mapping.items()}
        coords = tuple(mapping.get(c, c) for c in self.coords)
        g = tuple(tuple(substitute(e, sub_map) for e in row) for row in self.g)
        return MetricSpec(coords, g, self.params)


@dataclass
class MetricFile:
    """Parsed contents of a metric/fields file."""

    coords: tuple[str, ...]
    params: dict[str, float]
    metric: MetricSpec | None
    fields: dict[str, Expr]
    forms: dict[str, list[Expr]]
    plan: dict[str, str]
    meta: dict[str, str]


_SECTIONS = ("space", "params", "metric", "fields", "plan", "case")


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse_metric_file(text: str) -> MetricFile:
    """Parse the line-oriented metric file format.

    Indices are 1-based in the file.  Missing metric entries are zero; giving
    both ``g i j`` and ``g j i`` is an error even if the expressions agree.
    """
    section = None
    coords: tuple[str, ...] | None = None
    params: dict[str, float] = {}
    entries: dict[tuple[int, int], tuple[Expr, int]] = {}
    fields: dict[str, Expr] = {}
    forms: dict[str, dict[int, Expr]] = {}
    plan: dict[str, str] = {}
    meta: dict[str, str] = {}
    saw_metric = False

    def expr_at(src: str, lineno: int) -> Expr:
        try:
            return parse_expr(src)
        except ParseError as exc:
            raise MetricFileError(str(exc), lineno) from exc

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            section = m.group(1).lower()
            if section not in _SECTIONS:
                raise MetricFileError(f"unknown section [{section}]", lineno)
            saw_metric = saw_metric or section == "metric"
            continue
        if "=" not in line:
            raise MetricFileError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if section is None:
            raise MetricFileError("entry outside of any section", lineno)
        if section == "space":
            if key != "coords":
                raise MetricFileError(f"unknown [space] key {key!r}", lineno)
            coords = tuple(value.split())
            if len(set(coords)) != len(coords):
                raise MetricFileError("repeated coordinate name", lineno)
        elif section == "params":
            try:
                params[key] = float(eval_float(expr_at(value, lineno), {}, params))
            except EvaluationError as exc:
                raise MetricFileError(f"parameter {key}: {exc}", lineno) from exc
        elif section == "metric":
            parts = key.split()
            if len(parts) != 3 or parts[0] != "g":
                raise MetricFileError(f"metric entries look like 'g i j = expr', got {key!r}", lineno)
            try:
                i, j = int(parts[1]) - 1, int(parts[2]) - 1
            except ValueError:
                raise MetricFileError(f"bad indices in {key!r}", lineno) from None
            if coords is None:
                raise MetricFileError("[metric] before coords line", lineno)
            n = len(coords)
            if not (0 <= i < n and 0 <= j < n):
                raise MetricFileError(f"index out of range in {key!r} for {n} coordinates", lineno)
            k = (min(i, j), max(i, j))
            if k in entries:
                raise MetricFileError(
                    f"duplicate entry g {k[0] + 1} {k[1] + 1} (first given on line {entries[k][1]})", lineno
                )
            entries[k] = (expr_at(value, lineno), lineno)
        elif section == "fields":
            parts = key.split()
            if len(parts) == 1:
                if parts[0] in fields or parts[0] in forms:
                    raise MetricFileError(f"duplicate field {parts[0]!r}", lineno)
                fields[parts[0]] = expr_at(value, lineno)
            elif len(parts) == 2:
                name, idx = parts
                comp = forms.setdefault(name, {})
                try:
                    idx_i = int(idx) - 1
                except ValueError:
                    raise MetricFileError(f"bad component index in {key!r}", lineno) from None
                if idx_i in comp:
                    raise MetricFileError(f"duplicate component {key!r}", lineno)
                comp[idx_i] = expr_at(value, lineno)
            else:
                raise MetricFileError(f"bad field key {key!r}", lineno)
        elif section == "plan":
            plan[key] = value
        elif section == "case":
            meta[key] = value

    if coords is None:
        raise MetricFileError("missing 'coords = ...' line in [space]")
    metric = None
    if saw_metric:
        if len(coords) not in (3, 6):
            raise MetricFileError(f"metric needs 3 or 6 coordinates, got {len(coords)}")
        metric = MetricSpec.from_components(coords, {k: v[0] for k, v in entries.items()}, params)
    out_forms = {}
    for name, comp in forms.items():
        n = len(coords)
        if any(not 0 <= i < n for i in comp):
            raise MetricFileError(f"one-form {name!r} component index out of range")
        out_forms[name] = [comp.get(i, ZERO) for i in range(n)]
    return MetricFile(coords, params, metric, fields, out_forms, plan, meta)


def format_metric_file(mf: MetricFile) -> str:
    """Inverse of :func:`parse_metric_file` (up to comments and layout)."""
    lines = []
    if mf.meta:
        lines.append("[case]")
        lines += [f"{k} = {v}" for k, v in mf.meta.items()]
        lines.append("")
    lines += ["[space]", "coords = " + " ".join(mf.coords), ""]
    if mf.params:
        lines.append("[params]")
        lines += [f"{k} = {v!r}" for k, v in mf.params.items()]
        lines.append("")
    if mf.metric is not None:
        lines.append("[metric]")
        n = mf.metric.dim
        for i in range(n):
            for j in range(i, n):
                e = mf.metric.g[i][j]
                if not is_zero(e):
                    lines.append(f"g {i + 1} {j + 1} = {to_text(e)}")
        lines.append("")
    if mf.fields or mf.forms:
        lines.append("[fields]")
        lines += [f"{k} = {to_text(v)}" for k, v in mf.fields.items()]
        for name, comps in mf.forms.items():
            lines += [f"{name} {i + 1} = {to_text(c)}" for i, c in enumerate(comps)]
        lines.append("")
    if mf.plan:
        lines.append("[plan]")
        lines += [f"{k} = {v}" for k, v in mf.plan.items()]
        lines.append("")
    return "\n".join(lines)
