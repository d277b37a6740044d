"""Multivariate truncated Taylor arithmetic.

A jet stores the Taylor coefficients ``d^a f / a!`` of a function at a point
for every multi-index ``a`` with ``|a| <= order``.  Coefficients are kept in a
dense numpy array in graded-lex order, so the monomials of degree ``<= k``
always form a prefix of the array and truncation is a slice.

Most of the heavy lifting is done on raw coefficient arrays with a trailing
coefficient axis (shape ``(..., N)``); :class:`Jet` is the scalar wrapper used
by the expression evaluator.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError

MAX_VARS = 6
MAX_ORDER = 4


class JetDomainError(EvaluationError):
    """Raised when an elementary function is applied outside its domain."""

    def __init__(self, fn: str, value):
        super().__init__(f"{fn}: argument {value!r} outside domain")
        self.fn = fn
        self.value = value


def _multi_indices(nvars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(order + 1):
        # reverse lex inside a degree: (1,0,0) before (0,1,0)
        level = [a for a in itertools.product(range(deg + 1), repeat=nvars) if sum(a) == deg]
        level.sort(reverse=True)
        out.extend(level)
    return out


class JetSpace:
    """Index bookkeeping for jets with a given variable count and order."""

    def __init__(self, nvars: int, order: int):
        if not 1 <= nvars <= MAX_VARS:
            raise ValueError(f"nvars must be in 1..{MAX_VARS}, got {nvars}")
        if not 0 <= order <= MAX_ORDER + 1:
            raise ValueError(f"order must be in 0..{MAX_ORDER + 1}, got {order}")
        self.nvars = nvars
        self.order = order
        self.indices = _multi_indices(nvars, order)
        self.size = len(self.indices)
        self.position = {a: i for i, a in enumerate(self.indices)}
        self.degree = np.array([sum(a) for a in self.indices])
        self.factorial = np.array([math.prod(math.factorial(k) for k in a) for a in self.indices], dtype=float)

        ii, jj, kk = [], [], []
        for i, a in enumerate(self.indices):
            for j, b in enumerate(self.indices):
                c = tuple(x + y for x, y in zip(a, b))
                k = self.position.get(c)
                if k is not None:
                    ii.append(i)
                    jj.append(j)
                    kk.append(k)
        self._left = np.array(ii)
        self._right = np.array(jj)
        scatter = np.zeros((len(kk), self.size))
        scatter[np.arange(len(kk)), kk] = 1.0
        self._scatter = scatter

    def __repr__(self):
        return f"JetSpace(nvars={self.nvars}, order={self.order})"

    def prefix(self, order: int) -> int:
        """Number of coefficients of degree ``<= order``."""
        return int(np.count_nonzero(self.degree <= order))

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Truncated product of coefficient arrays, broadcasting leading axes."""
        if self.size == 1:
            return a * b
        return (a[..., self._left] * b[..., self._right]) @ self._scatter

    def einsum(self, subscripts: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Tensor contraction of two jet-valued arrays.

        ``subscripts`` names only the tensor axes, e.g. ``"im,mjk->ijk"``; the
        coefficient axis is handled here.
        """
        ins, out = subscripts.split("->")
        sa, sb = ins.split(",")
        if self.size == 1:
            return np.einsum(f"{sa}p,{sb}p->{out}p", a, b)
        pa = a[..., self._left]
        pb = b[..., self._right]
        return np.einsum(f"{sa}p,{sb}p->{out}p", pa, pb) @ self._scatter

    def derivative_map(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """Source positions and weights taking coefficients to d/dx_var, one order lower."""
        return _derivative_map(self.nvars, self.order, var)

    def unit(self, var: int) -> np.ndarray:
        c = np.zeros(self.size)
        if self.order >= 1:
            e = [0] * self.nvars
            e[var] = 1
            c[self.position[tuple(e)]] = 1.0
        return c


@functools.cache
def space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


@functools.cache
def _derivative_map(nvars: int, order: int, var: int):
    hi = space(nvars, order)
    lo = space(nvars, order - 1)
    src = np.empty(lo.size, dtype=int)
    weight = np.empty(lo.size)
    for i, a in enumerate(lo.indices):
        b = list(a)
        b[var] += 1
        src[i] = hi.position[tuple(b)]
        weight[i] = b[var]
    return src, weight


@functools.cache
def embedding(nvars_from: int, nvars_to: int, order: int) -> np.ndarray:
    """Positions of the coefficients of a jet in the leading variables of a larger space."""
    small = space(nvars_from, order)
    big = space(nvars_to, order)
    pad = (0,) * (nvars_to - nvars_from)
    return np.array([big.position[a + pad] for a in small.indices])


def derivative(sp: JetSpace, coeffs: np.ndarray, var: int) -> np.ndarray:
    """Coefficients of the partial derivative along ``var`` (order drops by one)."""
    if sp.order == 0:
        raise ValueError("cannot differentiate an order-0 jet")
    src, weight = sp.derivative_map(var)
    return coeffs[..., src] * weight


def gradient(sp: JetSpace, coeffs: np.ndarray) -> np.ndarray:
    """Stack of all first partials, new leading axis indexes the variable."""
    return np.stack([derivative(sp, coeffs, v) for v in range(sp.nvars)])


def embed(coeffs: np.ndarray, nvars_from: int, nvars_to: int, order: int) -> np.ndarray:
    if nvars_from == nvars_to:
        return coeffs
    pos = embedding(nvars_from, nvars_to, order)
    out = np.zeros(coeffs.shape[:-1] + (space(nvars_to, order).size,), dtype=coeffs.dtype)
    out[..., pos] = coeffs
    return out


# --- univariate Taylor coefficients of elementary functions ---------------


def _series_div(a, b, n):
    out = np.zeros((n + 1,) + np.shape(a[0]), dtype=np.result_type(a, b, float))
    for k in range(n + 1):
        acc = a[k]
        for i in range(1, k + 1):
            acc = acc - b[i] * out[k - i]
        out[k] = acc / b[0]
    return out


def _sin_cos(x0, n):
    s = np.empty((n + 1,) + np.shape(x0), dtype=np.result_type(x0, float))
    c = np.empty_like(s)
    for k in range(n + 1):
        s[k] = np.sin(x0 + k * np.pi / 2) / math.factorial(k)
        c[k] = np.cos(x0 + k * np.pi / 2) / math.factorial(k)
    return s, c


def _sinh_cosh(x0, n):
    s = np.empty((n + 1,) + np.shape(x0), dtype=np.result_type(x0, float))
    c = np.empty_like(s)
    for k in range(n + 1):
        even = k % 2 == 0
        s[k] = (np.cosh(x0) if not even else np.sinh(x0)) / math.factorial(k)
        c[k] = (np.sinh(x0) if not even else np.cosh(x0)) / math.factorial(k)
    return s, c


def _power_series(x0, p, n):
    out = np.empty((n + 1,) + np.shape(x0), dtype=np.result_type(x0, float))
    coef = 1.0
    for k in range(n + 1):
        out[k] = coef * x0 ** (p - k)
        coef *= (p - k) / (k + 1)
    return out


def _check(fn, ok, x0):
    if not np.all(ok):
        bad = np.asarray(x0)[~np.asarray(ok)] if np.ndim(x0) else x0
        raise JetDomainError(fn, np.ravel(bad)[0] if np.ndim(bad) else bad)


def univariate_coeffs(fn: str, x0, n: int, exponent: float | None = None) -> np.ndarray:
    """Taylor coefficients ``f^(k)(x0)/k!`` for ``k = 0..n``."""
    x0 = np.asarray(x0)
    real = not np.iscomplexobj(x0)
    if fn == "exp":
        e = np.exp(x0)
        return np.array([e / math.factorial(k) for k in range(n + 1)])
    if fn == "ln":
        if real:
            _check("ln", x0 > 0, x0)
        out = [np.log(x0)]
        out += [(-1) ** (k + 1) / (k * x0**k) for k in range(1, n + 1)]
        return np.array(out)
    if fn == "sqrt":
        if real:
            _check("sqrt", x0 > 0, x0)
        return _power_series(x0, 0.5, n)
    if fn == "power":
        if real:
            _check("power", x0 > 0, x0)
        return _power_series(x0, exponent, n)
    if fn == "recip":
        _check("division", x0 != 0, x0)
        return np.array([(-1) ** k / x0 ** (k + 1) for k in range(n + 1)])
    if fn == "sin":
        return _sin_cos(x0, n)[0]
    if fn == "cos":
        return _sin_cos(x0, n)[1]
    if fn == "tan":
        s, c = _sin_cos(x0, n)
        if real:
            _check("tan", np.abs(c[0]) > 0, x0)
        return _series_div(s, c, n)
    if fn == "sinh":
        return _sinh_cosh(x0, n)[0]
    if fn == "cosh":
        return _sinh_cosh(x0, n)[1]
    if fn == "tanh":
        s, c = _sinh_cosh(x0, n)
        return _series_div(s, c, n)
    if fn == "atan":
        # atan' = 1/(1+t^2); integrate the series of the derivative
        one_plus = np.zeros((n + 1,) + x0.shape, dtype=np.result_type(x0, float))
        one_plus[0] = 1 + x0**2
        if n >= 1:
            one_plus[1] = 2 * x0
        if n >= 2:
            one_plus[2] = 1.0
        unit = np.zeros_like(one_plus)
        unit[0] = 1.0
        d = _series_div(unit, one_plus, n)
        out = np.empty_like(d)
        out[0] = np.arctan(x0)
        for k in range(1, n + 1):
            out[k] = d[k - 1] / k
        return out
    if fn == "sign":
        _check("sign", x0 != 0, x0)
        out = np.zeros((n + 1,) + x0.shape)
        out[0] = np.sign(x0)
        return out
    raise ValueError(f"unknown function {fn!r}")


ELEMENTARY = ("exp", "ln", "sqrt", "sin", "cos", "tan", "atan", "sinh", "cosh", "tanh", "sign")


def compose(sp: JetSpace, fn: str, coeffs: np.ndarray, exponent: float | None = None) -> np.ndarray:
    """Apply an elementary function to jet coefficients (Taylor composition)."""
    x0 = coeffs[..., 0]
    t = univariate_coeffs(fn, x0, sp.order, exponent)
    h = coeffs.copy()
    h[..., 0] = 0
    # Horner: t0 + h (t1 + h (t2 + ...))
    acc = np.zeros(coeffs.shape, dtype=np.result_type(t, coeffs))
    acc[..., 0] = t[sp.order]
    for k in range(sp.order - 1, -1, -1):
        acc = sp.mul(acc, h)
        acc[..., 0] = acc[..., 0] + t[k]
    return acc


def int_power(sp: JetSpace, coeffs: np.ndarray, n: int) -> np.ndarray:
    if n < 0:
        return int_power(sp, compose(sp, "recip", coeffs), -n)
    result = np.zeros_like(coeffs)
    result[..., 0] = 1.0
    base = coeffs
    while n:
        if n & 1:
            result = sp.mul(result, base)
        n >>= 1
        if n:
            base = sp.mul(base, base)
    return result


# --- scalar wrapper -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Jet:
    """A truncated Taylor expansion of a scalar function of ``nvars`` variables."""

    nvars: int
    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != (self.space.size,):
            raise ValueError(f"expected {self.space.size} coefficients, got shape {c.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def space(self) -> JetSpace:
        return space(self.nvars, self.order)

    @property
    def value(self):
        return self.coeffs[0]

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> Jet:
        c = np.zeros(space(nvars, order).size, dtype=np.result_type(value, float))
        c[0] = value
        return cls(nvars, order, c)

    def coeff(self, alpha) -> float:
        return self.coeffs[self.space.position[tuple(alpha)]]

    def _wrap(self, c) -> Jet:
        return Jet(self.nvars, self.order, c)

    def _other(self, other):
        if isinstance(other, Jet):
            if (other.nvars, other.order) != (self.nvars, self.order):
                raise ValueError("jets from different spaces")
            return other.coeffs
        c = np.zeros(self.space.size, dtype=np.result_type(other, float))
        c[0] = other
        return c

    def __add__(self, other):
        return self._wrap(self.coeffs + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.coeffs - self._other(other))

    def __rsub__(self, other):
        return self._wrap(self._other(other) - self.coeffs)

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self._wrap(self.coeffs * other)
        return self._wrap(self.space.mul(self.coeffs, self._other(other)))

    __rmul__ = __mul__

    def reciprocal(self) -> Jet:
        return self._wrap(compose(self.space, "recip", self.coeffs))

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            if other == 0:
                raise JetDomainError("division", 0.0)
            return self._wrap(self.coeffs / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            if exponent.is_constant():
                exponent = exponent.value
            else:
                return jet_apply("exp", exponent * jet_apply("ln", self))
        e = float(np.real(exponent))
        if e == int(e) and abs(e) <= 64:
            return self._wrap(int_power(self.space, self.coeffs, int(e)))
        return self._wrap(compose(self.space, "power", self.coeffs, e))

    def is_constant(self) -> bool:
        return not np.any(self.coeffs[1:])

    def derivative(self, var: int) -> Jet:
        return Jet(self.nvars, self.order - 1, derivative(self.space, self.coeffs, var))

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value!r})"


def lift_variable(point_value, var_index: int, nvars: int, order: int) -> Jet:
    """Jet of the coordinate function ``x_var_index`` expanded at ``point_value``."""
    if not 0 <= var_index < nvars:
        raise IndexError(f"var_index {var_index} out of range for {nvars} variables")
    sp = space(nvars, order)
    c = sp.unit(var_index)
    c[0] = point_value
    return Jet(nvars, order, c)


def jet_apply(fn: str, arg: Jet, exponent: float | None = None) -> Jet:
    """Compose an elementary function (or ``power`` with ``exponent``) with a jet."""
    if fn == "csgn":
        fn = "sign"
    if fn not in ELEMENTARY and fn != "power":
        raise ValueError(f"unknown function {fn!r}")
    return Jet(arg.nvars, arg.order, compose(arg.space, fn, arg.coeffs, exponent))


def extract(jet: Jet, alpha) -> float:
    """Partial derivative ``d^alpha f`` at the expansion point."""
    alpha = tuple(alpha)
    if len(alpha) != jet.nvars:
        raise ValueError(f"multi-index {alpha} has wrong length for {jet.nvars} variables")
    if sum(alpha) > jet.order:
        raise ValueError(f"|alpha|={sum(alpha)} exceeds jet order {jet.order}")
    k = jet.space.position[alpha]
    return jet.coeffs[k] * jet.space.factorial[k]
