"""Riemann extensions of 3-dimensional metrics.

The extension of a torsion-free connection ``Gamma`` on coordinates ``x^i``
is the 6-dimensional metric

    -2 Gamma^i_jk psi_i dx^j dx^k + 2 dx^i dpsi_i

on ``(x, y, z, psi1, psi2, psi3)``.  Its components are built as expressions
(with derivative nodes for the connection), so the result is an ordinary
:class:`~curvlab.dsl.MetricSpec` and goes through the same curvature engine.
"""

from __future__ import annotations

from enum import Enum

from .dsl import ONE, ZERO, Expr, MetricSpec, Num, Var, call, diff, is_zero

PSI = ("psi1", "psi2", "psi3")


class Mode(str, Enum):
    LEVI_CIVITA = "lc"
    MODIFIED_PLUS = "mod+"
    MODIFIED_IMAGINARY = "mod-"

    @classmethod
    def parse(cls, text: str) -> Mode:
        aliases = {
            "levi_civita": cls.LEVI_CIVITA,
            "modified(+1)": cls.MODIFIED_PLUS,
            "modified(i)": cls.MODIFIED_IMAGINARY,
        }
        if text in aliases:
            return aliases[text]
        return cls(text)


def _inverse_exprs(g):
    """Adjugate/determinant inverse of a symbolic 3x3 matrix."""
    if all(is_zero(g[i][j]) for i in range(3) for j in range(3) if i != j):
        return [[ONE / g[i][i] if i == j else ZERO for j in range(3)] for i in range(3)]

    def cof(i, j):
        r = [a for a in range(3) if a != i]
        c = [b for b in range(3) if b != j]
        minor = g[r[0]][c[0]] * g[r[1]][c[1]] - g[r[0]][c[1]] * g[r[1]][c[0]]
        return minor if (i + j) % 2 == 0 else -minor

    det = g[0][0] * cof(0, 0) + g[0][1] * cof(0, 1) + g[0][2] * cof(0, 2)
    return [[cof(j, i) / det for j in range(3)] for i in range(3)]


def christoffel_exprs(base: MetricSpec) -> list[list[list[Expr]]]:
    """Levi-Civita connection of ``base`` as expressions, ``[i][j][k] = Gamma^i_jk``."""
    if base.dim != 3:
        raise ValueError(f"extension needs a 3-dimensional base metric, got {base.dim}")
    g = base.g
    x = base.coords
    dg = [[[diff(g[i][j], x[a]) for j in range(3)] for i in range(3)] for a in range(3)]
    inv = _inverse_exprs(g)
    first = [[[(dg[j][m][k] + dg[k][m][j] - dg[m][j][k]) * 0.5 for k in range(3)] for j in range(3)] for m in range(3)]
    gam = [[[ZERO] * 3 for _ in range(3)] for _ in range(3)]
    for i in range(3):
        for j in range(3):
            for k in range(j, 3):
                acc = ZERO
                for m in range(3):
                    acc = acc + inv[i][m] * first[m][j][k]
                gam[i][j][k] = gam[i][k][j] = acc
    return gam


def modified_christoffel_exprs(base: MetricSpec, imaginary: bool = False):
    """Diagonal-metric connection with the three mixed components switched on.

    Gamma^2_13 = CA/B, Gamma^3_12 = AB/C, Gamma^1_23 = BC/A (times i when
    ``imaginary``), where A, B, C are the square roots of the diagonal entries.
    """
    if not base.is_diagonal():
        raise ValueError("modified extensions are defined for diagonal base metrics only")
    gam = christoffel_exprs(base)
    a, b, c = (call("sqrt", base.g[i][i]) for i in range(3))
    unit = Num(1j) if imaginary else ONE
    extra = {(1, 0, 2): c * a / b, (2, 0, 1): a * b / c, (0, 1, 2): b * c / a}
    for (i, j, k), e in extra.items():
        gam[i][j][k] = gam[i][k][j] = gam[i][j][k] + unit * e
    return gam


def extend(
    base: MetricSpec,
    mode: Mode | str = Mode.LEVI_CIVITA,
    psi_names=PSI,
    cross_sign: float = 1.0,
) -> MetricSpec:
    """Six-dimensional extension metric on ``base.coords + psi_names``.

    ``cross_sign`` is the sign of the ``dx^i dpsi_i`` block relative to the
    standard Riemann extension ``-2 Gamma psi dx dx + 2 dx dpsi``.  Only the
    standard sign (+1) turns constant-curvature bases into symmetric spaces;
    ``cross_sign=-1`` reproduces the all-minus display and is kept for
    comparison.
    """
    if cross_sign not in (1.0, -1.0):
        raise ValueError("cross_sign must be +1 or -1")
    mode = Mode.parse(mode) if isinstance(mode, str) else mode
    if base.dim != 3:
        raise ValueError(f"extension needs a 3-dimensional base metric, got {base.dim}")
    if mode is Mode.LEVI_CIVITA:
        gam = christoffel_exprs(base)
    else:
        gam = modified_christoffel_exprs(base, imaginary=mode is Mode.MODIFIED_IMAGINARY)
    psi = [Var(p) for p in psi_names]
    entries = {}
    for j in range(3):
        for k in range(j, 3):
            acc = ZERO
            for i in range(3):
                acc = acc + gam[i][j][k] * psi[i]
            entries[(j, k)] = acc * -2.0
        entries[(j, 3 + j)] = Num(float(cross_sign))
    return MetricSpec.from_components(tuple(base.coords) + tuple(psi_names), entries, base.params)
