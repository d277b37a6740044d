"""Finite-difference reference values, independent of the jet engine.

Everything here works on plain float evaluation of expressions and
Richardson-extrapolated central differences.  It is slow and only accurate
to roughly 1e-7, which is enough to confirm (or refute) closed-form claims
before they are frozen as regression baselines.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from itertools import product

import numpy as np

from .dsl import Expr, MetricSpec, as_expr, eval_float

DEFAULT_STEP = 1e-2


def richardson(fn: Callable[[float], float], h: float = DEFAULT_STEP, levels: int = 4) -> float:
    """Extrapolate ``fn(h) -> fn(0)`` for an even-order error expansion in h."""
    table = [[fn(h / 2**k)] for k in range(levels)]
    for j in range(1, levels):
        factor = 4.0**j
        for k in range(j, levels):
            table[k].append((factor * table[k][j - 1] - table[k - 1][j - 1]) / (factor - 1))
    return table[-1][-1]


def central_partial(f: Callable[[np.ndarray], float], point, alpha: Sequence[int], h: float = DEFAULT_STEP) -> float:
    """Mixed partial derivative of multi-index ``alpha`` by nested central differences."""
    point = np.asarray(point, dtype=float)
    alpha = tuple(int(a) for a in alpha)

    def stencil(step: float) -> float:
        # tensor product of 1D central stencils for each order
        axes = []
        for var, n in enumerate(alpha):
            if n == 0:
                continue
            offsets, weights = _central_weights(n)
            axes.append([(var, o * step, w / step**n) for o, w in zip(offsets, weights)])
        total = 0.0
        for combo in product(*axes):
            p = point.copy()
            w = 1.0
            for var, off, wt in combo:
                p[var] += off
                w *= wt
            total += w * f(p)
        return total

    if sum(alpha) == 0:
        return float(f(point))
    return richardson(stencil, h)


def _central_weights(n: int):
    if n == 1:
        return (-1.0, 1.0), (-0.5, 0.5)
    if n == 2:
        return (-1.0, 0.0, 1.0), (1.0, -2.0, 1.0)
    if n == 3:
        return (-2.0, -1.0, 1.0, 2.0), (-0.5, 1.0, -1.0, 0.5)
    raise ValueError(f"central stencils implemented up to order 3, got {n}")


def expr_partial(e: Expr | str, coords: Sequence[str], point, alpha, params=None, h: float = DEFAULT_STEP) -> float:
    e = as_expr(e)
    params = dict(params or {})

    def f(p):
        return eval_float(e, dict(zip(coords, p)), params)

    return central_partial(f, point, alpha, h)


class FieldOracle:
    """Drop-in replacement for the jet-based field accessor used by residuals."""

    def __init__(self, fields: Mapping[str, Expr], point, params=None, coords=("x", "y", "z"), h=DEFAULT_STEP):
        self.fields = {k: as_expr(v) for k, v in fields.items()}
        self.point = point
        self.params = dict(params or {})
        self.coords = coords
        self.h = h

    def __call__(self, name: str, *wrt: str) -> float:
        alpha = [0] * len(self.coords)
        for v in wrt:
            alpha[self.coords.index(v)] += 1
        return expr_partial(self.fields[name], self.coords, self.point, alpha, self.params, self.h)


def fd_residual(sys, fields, params, point, variant=None, h: float = DEFAULT_STEP) -> np.ndarray:
    """Residual of a system with every derivative taken by finite differences."""
    from .residuals import SYSTEMS, SystemId

    sys = SystemId(sys)
    info = SYSTEMS[sys]
    params = dict(params or {})
    kwargs = {"variant": variant or "verbatim"} if info.variants else {}
    return np.asarray(info.fn(FieldOracle(fields, point, params, h=h), params, **kwargs), dtype=float)


def fd_riemann(m: MetricSpec, point, params=None, h: float = DEFAULT_STEP):
    """(g, R_ijkl) at a point from finite differences of the metric components.

    Uses the closed form of the lowered curvature in terms of g, dg and ddg,
    so no connection derivatives are differentiated numerically.
    """
    params = {**m.params, **(params or {})}
    n = m.dim
    coords = m.coords
    point = np.asarray(point, dtype=float)

    def comp(i, j, alpha):
        return expr_partial(m.g[i][j], coords, point, alpha, params, h)

    unit = np.eye(n, dtype=int)
    g = np.array([[comp(i, j, [0] * n) for j in range(n)] for i in range(n)])
    dg = np.zeros((n, n, n))  # dg[a, i, j] = d_a g_ij
    ddg = np.zeros((n, n, n, n))  # ddg[a, b, i, j]
    for i in range(n):
        for j in range(i, n):
            for a in range(n):
                dg[a, i, j] = dg[a, j, i] = comp(i, j, unit[a])
                for b in range(a, n):
                    v = comp(i, j, unit[a] + unit[b])
                    ddg[a, b, i, j] = ddg[b, a, i, j] = ddg[a, b, j, i] = ddg[b, a, j, i] = v
    ginv = np.linalg.inv(g)
    # first kind: [jk, m] = (d_j g_mk + d_k g_mj - d_m g_jk) / 2
    first = 0.5 * (np.einsum("jmk->mjk", dg) + np.einsum("kmj->mjk", dg) - dg)
    gamma = np.einsum("im,mjk->ijk", ginv, first)
    # R_ijkl = 1/2 (d_j d_k g_il + d_i d_l g_jk - d_i d_k g_jl - d_j d_l g_ik)
    #        + g_mp (Gamma^m_il Gamma^p_jk - Gamma^m_ik Gamma^p_jl)
    second = 0.5 * (
        np.einsum("jkil->ijkl", ddg)
        + np.einsum("iljk->ijkl", ddg)
        - np.einsum("ikjl->ijkl", ddg)
        - np.einsum("jlik->ijkl", ddg)
    )
    quad = np.einsum("mp,mil,pjk->ijkl", g, gamma, gamma) - np.einsum("mp,mik,pjl->ijkl", g, gamma, gamma)
    return g, second + quad
