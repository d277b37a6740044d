"""Pointwise residuals of the PDE systems attached to constant-curvature metrics.

Each system is written out once below as "left-hand side minus right-hand
side" in the same arrangement as the printed equations, so a residual
vector of zeros means every equation holds at the point.  Fields are
expressions in the coordinates ``x, y, z``; their partial derivatives come
from order-3 jets.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dsl import Evaluator, Expr, as_expr
from .errors import EvaluationError, SingularPointError
from .jets import extract

COORDS = ("x", "y", "z")
JET_ORDER = 3
# Denominators smaller than this are treated as a singular point.
SINGULAR_ATOL = 1e-12


class SystemId(str, Enum):
    DARBOUX = "darboux"
    LAME_FULL = "lame_full"
    KDV = "kdv"
    KDV_PAIR = "kdv_pair"
    LIOUVILLE = "liouville"
    F_EQUATION = "f_equation"
    SINE_GORDON = "sine_gordon"
    SG_LINEAR = "sg_linear"
    B_SYSTEM = "b_system"
    GEN_DARBOUX = "gen_darboux"
    NORMAL_K = "normal_k"
    K1_LINEAR = "k1_linear"
    K2_LINEAR = "k2_linear"
    THEOREM3_RELATIONS = "theorem3_relations"
    PHI_RELATION = "phi_relation"
    K1_ABC_SYSTEM = "k1_abc_system"


class FieldPoint:
    """Values and partial derivatives of named fields at one point."""

    def __init__(self, fields: Mapping[str, Expr], point, params: Mapping[str, float]):
        if len(point) != 3:
            raise ValueError(f"residual points have 3 coordinates (x, y, z), got {len(point)}")
        self._ev = Evaluator(COORDS, point, JET_ORDER, params)
        self._fields = {k: as_expr(v) for k, v in fields.items()}
        self._jets = {}

    def __call__(self, name: str, *wrt: str) -> float | complex:
        jet = self._jets.get(name)
        if jet is None:
            if name not in self._fields:
                raise KeyError(name)
            jet = self._jets[name] = self._ev(self._fields[name])
        alpha = [0, 0, 0]
        for v in wrt:
            alpha[COORDS.index(v)] += 1
        v = extract(jet, alpha)
        # complex-valued fields (e.g. analytic continuations) stay complex
        return complex(v) if np.iscomplexobj(v) else float(v)


def _div(num: float, den: float, what: str) -> float:
    if abs(den) < SINGULAR_ATOL:
        raise SingularPointError(f"singular point: {what} vanishes")
    return num / den


# --- the systems ----------------------------------------------------------


def _darboux(f, p):
    A, B, C = f("A"), f("B"), f("C")
    return [
        f("A", "y", "z") - _div(f("B", "z") * f("A", "y"), B, "B") - _div(f("C", "y") * f("A", "z"), C, "C"),
        f("B", "x", "z") - _div(f("A", "z") * f("B", "x"), A, "A") - _div(f("C", "x") * f("B", "z"), C, "C"),
        f("C", "x", "y") - _div(f("A", "y") * f("C", "x"), A, "A") - _div(f("B", "x") * f("C", "y"), B, "B"),
    ]


def _lame_full(f, p):
    lam = p["lambda"]
    A, B, C = f("A"), f("B"), f("C")
    for v, name in ((A, "A"), (B, "B"), (C, "C")):
        _div(1.0, v, name)
    eq5 = (
        lam * C * B
        + f("C", "x") * f("B", "x") / A**2
        + f("B", "z", "z") / C
        - f("B", "z") * f("C", "z") / C**2
        + f("C", "y", "y") / B
        - f("B", "y") * f("C", "y") / B**2
    )
    eq6 = (
        lam * A * C
        - f("A", "z") * f("C", "z") / C**2
        + f("A", "z", "z") / C
        + f("A", "y") * f("C", "y") / B**2
        + f("C", "x", "x") / A
        - f("A", "x") * f("C", "x") / A**2
    )
    eq7 = (
        lam * B * A
        - f("A", "x") * f("B", "x") / A**2
        + f("B", "x", "x") / A
        + f("A", "z") * f("B", "z") / C**2
        + f("A", "y", "y") / B
        - f("A", "y") * f("B", "y") / B**2
    )
    return _darboux(f, p) + [eq5, eq6, eq7]


def _kdv(f, p):
    return [f("l", "x", "x", "x") - 3 * f("l") * f("l", "x") + f("l", "z")]


def _kdv_pair(f, p):
    l_x = f("l", "x")
    return _kdv(f, p) + [l_x - f("m", "z") + 2 * l_x * f("m") + f("l") * f("m", "x")]


def _liouville(f, p):
    return [4 * f("U", "x", "y") + np.exp(2 * f("U"))]


def _f_equation(f, p):
    F = f("F")
    return [-4 * f("F", "y") * f("F", "x") + 4 * F * f("F", "x", "y") + F**4]


def _sine_gordon(f, p):
    return [f("u", "x", "y") + p["lambda"] * np.sin(f("u"))]


def _sg_linear(f, p):
    lam = p["lambda"]
    A, u = f("A"), f("u")
    s, c = np.sin(u), np.cos(u)
    _div(1.0, s, "sin(u)")
    u_x, u_y = f("u", "x"), f("u", "y")
    A_x, A_y = f("A", "x"), f("A", "y")
    return [
        f("A", "x", "y") + lam * A * c,
        f("A", "x", "x") - c * u_x * A_x / s + lam * A + u_x * A_y / s,
        f("A", "y", "y") - c * u_y * A_y / s + lam * A + A_x * u_y / s,
    ]


def _b_system(f, p):
    lam = p["lambda"]
    B = f("B")
    s, c = np.sin(B), np.cos(B)
    _div(1.0, s, "sin(B)")
    B_x, B_y, B_z = f("B", "x"), f("B", "y"), f("B", "z")
    B_xz, B_yz = f("B", "x", "z"), f("B", "y", "z")
    return [
        f("B", "x", "y") + 0.25 * s * (-1 + 4 * lam),
        f("B", "y", "y", "z") - c * B_y * B_yz / s + B_xz * B_y / s - (0.25 - lam) * B_z,
        f("B", "x", "x", "z") - c * B_x * B_xz / s + B_x * B_yz / s - (0.25 - lam) * B_z,
    ]


def _gen_darboux(f, p):
    base = _darboux(f, p)
    A, B, C = f("A"), f("B"), f("C")
    d_bc_x = f("B", "x") * C + B * f("C", "x")
    d_ac_y = f("A", "y") * C + A * f("C", "y")
    d_ab_z = f("A", "z") * B + A * f("B", "z")
    return [base[0] - 2 * d_bc_x, base[1] - 2 * d_ac_y, base[2] - 2 * d_ab_z]


def _normal_k(f, p, variant="verbatim"):
    K1, K2, K3 = f("K1"), f("K2"), f("K3")
    # coefficient on the diagonal term (K_l differentiated along x^l) of each equation
    if variant == "verbatim":
        diag = (1, 1, 3)
    elif variant == "all_three":
        diag = (3, 3, 3)
    elif variant == "diagonal_one":
        diag = (1, 1, 1)
    else:
        raise ValueError(f"unknown normal_k variant {variant!r}")
    out = []
    for l, v in enumerate(COORDS):
        coef = [3, 3, 3]
        coef[l] = diag[l]
        out.append(
            coef[0] * (K2 - K3) * f("K1", v) + coef[1] * (K3 - K1) * f("K2", v) + coef[2] * (K1 - K2) * f("K3", v)
        )
    return out


def _k1_linear(f, p):
    A, B, C = f("A"), f("B"), f("C")
    A_x, A_y, A_z = f("A", "x"), f("A", "y"), f("A", "z")
    K_x, K_y, K_z = f("K1", "x"), f("K1", "y"), f("K1", "z")
    return [
        f("K1", "x", "y")
        + _div(A_y * K_x, A, "A")
        + (A_x / A + _div(f("B", "x"), B, "B") - _div(f("A", "x", "y"), A_y, "A_y")) * K_y,
        f("K1", "x", "z")
        + _div(A_z * K_x, A, "A")
        + (_div(f("C", "x"), C, "C") + A_x / A - _div(f("A", "x", "z"), A_z, "A_z")) * K_z,
        f("K1", "y", "z")
        + (_div(f("B", "z"), B, "B") + A_z / A - _div(f("A", "y", "z"), A_y, "A_y")) * K_y
        + (-_div(A_y * f("B", "z"), A_z * B, "A_z B") + A_y / A) * K_z,
    ]


def _k2_linear(f, p, variant="verbatim"):
    A, B, C = f("A"), f("B"), f("C")
    B_x, B_y, B_z = f("B", "x"), f("B", "y"), f("B", "z")
    K_x, K_y, K_z = f("K2", "x"), f("K2", "y"), f("K2", "z")
    # the printed third equation starts with a K1 mixed partial
    if variant == "verbatim":
        lead = f("K1", "y", "z")
    elif variant == "corrected":
        lead = f("K2", "y", "z")
    else:
        raise ValueError(f"unknown k2_linear variant {variant!r}")
    return [
        f("K2", "x", "y")
        + _div(B_x * K_y, B, "B")
        + (B_y / B + _div(f("A", "y"), A, "A") - _div(f("B", "x", "y"), B_y, "B_y")) * K_x,
        f("K2", "x", "z")
        + (B_z / B - _div(f("C", "x") * B_z, C * B_x, "C B_x")) * K_x
        + (B_x / B - _div(f("B", "x", "z"), B_z, "B_z") + _div(f("C", "x"), C, "C")) * K_z,
        lead
        + _div(B_z * K_z, B, "B")
        + (_div(f("C", "y"), C, "C") + B_y / B - _div(f("B", "y", "z"), B_z, "B_z")) * K_z,
    ]


def _theorem3_relations(f, p):
    A, B, C = f("A"), f("B"), f("C")
    K1, K2, K3 = f("K1"), f("K2"), f("K3")
    return [
        f("K1", "y") - _div(f("A", "y") * (K2 - K1), A, "A"),
        f("K1", "z") + _div(f("A", "z") * (-K3 + K1), A, "A"),
        f("K2", "x") + _div(f("B", "x") * (K2 - K1), B, "B"),
        f("K2", "z") + _div(f("B", "z") * (K2 - K3), B, "B"),
        f("K3", "x") - _div(f("C", "x") * (-K3 + K1), C, "C"),
        f("K3", "y") - _div(f("C", "y") * (K2 - K3), C, "C"),
    ]


def _phi_relation(f, p):
    K1, K2, K3 = f("K1"), f("K2"), f("K3")
    p1, p2, p3 = f("phi1"), f("phi2"), f("phi3")
    return [K1 * (p2 - p3) + K2 * (p3 - p1) + K3 * (p1 - p2)]


def _k1_abc_system(f, p):
    a, b, c = f("a"), f("b"), f("c")
    a_x, b_y, c_z = f("a", "x"), f("b", "y"), f("c", "z")
    K_x, K_y, K_z = f("K1", "x"), f("K1", "y"), f("K1", "z")
    return [
        f("K1", "x", "y") - 0.5 * _div(-K_x * b_y + 3 * a_x * K_y, a - b, "a-b"),
        f("K1", "x", "z") - 0.5 * _div(3 * a_x * K_z - c_z * K_x, a - c, "a-c"),
        f("K1", "y", "z") - 0.5 * _div(-K_y * c_z + K_z * b_y, b - c, "b-c"),
    ]


@dataclass(frozen=True)
class SystemInfo:
    fields: tuple[str, ...]
    params: tuple[str, ...]
    equations: int
    fn: Callable
    variants: tuple[str, ...] = ()
    singular_loci: tuple[str, ...] = ()


SYSTEMS: dict[SystemId, SystemInfo] = {
    SystemId.DARBOUX: SystemInfo(("A", "B", "C"), (), 3, _darboux, singular_loci=("A", "B", "C")),
    SystemId.LAME_FULL: SystemInfo(("A", "B", "C"), ("lambda",), 6, _lame_full, singular_loci=("A", "B", "C")),
    SystemId.KDV: SystemInfo(("l",), (), 1, _kdv),
    SystemId.KDV_PAIR: SystemInfo(("l", "m"), (), 2, _kdv_pair),
    SystemId.LIOUVILLE: SystemInfo(("U",), (), 1, _liouville),
    SystemId.F_EQUATION: SystemInfo(("F",), (), 1, _f_equation),
    SystemId.SINE_GORDON: SystemInfo(("u",), ("lambda",), 1, _sine_gordon),
    SystemId.SG_LINEAR: SystemInfo(("A", "u"), ("lambda",), 3, _sg_linear, singular_loci=("sin(u)",)),
    SystemId.B_SYSTEM: SystemInfo(("B",), ("lambda",), 3, _b_system, singular_loci=("sin(B)",)),
    SystemId.GEN_DARBOUX: SystemInfo(("A", "B", "C"), (), 3, _gen_darboux, singular_loci=("A", "B", "C")),
    SystemId.NORMAL_K: SystemInfo(
        ("K1", "K2", "K3"), (), 3, _normal_k, variants=("verbatim", "all_three", "diagonal_one")
    ),
    SystemId.K1_LINEAR: SystemInfo(
        ("K1", "A", "B", "C"), (), 3, _k1_linear, singular_loci=("A", "B", "C", "A_y", "A_z")
    ),
    SystemId.K2_LINEAR: SystemInfo(
        ("K1", "K2", "A", "B", "C"),
        (),
        3,
        _k2_linear,
        variants=("verbatim", "corrected"),
        singular_loci=("A", "B", "C", "B_x", "B_y", "B_z"),
    ),
    SystemId.THEOREM3_RELATIONS: SystemInfo(
        ("K1", "K2", "K3", "A", "B", "C"), (), 6, _theorem3_relations, singular_loci=("A", "B", "C")
    ),
    SystemId.PHI_RELATION: SystemInfo(("K1", "K2", "K3", "phi1", "phi2", "phi3"), (), 1, _phi_relation),
    SystemId.K1_ABC_SYSTEM: SystemInfo(
        ("K1", "a", "b", "c"), (), 3, _k1_abc_system, singular_loci=("a-b", "a-c", "b-c")
    ),
}


def required_fields(sys: SystemId | str, variant: str | None = None) -> tuple[str, ...]:
    sys = SystemId(sys)
    names = SYSTEMS[sys].fields
    if sys is SystemId.K2_LINEAR and variant == "corrected":
        names = tuple(n for n in names if n != "K1")
    return names


def residual_at(
    sys: SystemId | str,
    fields: Mapping[str, Expr | str],
    params: Mapping[str, float] | None,
    point,
    variant: str | None = None,
) -> np.ndarray:
    """Residual vector of every equation of ``sys`` at ``point = (x, y, z)``.

    Raises :class:`SingularPointError` when a denominator of the system
    vanishes, and ``KeyError`` naming a missing field or parameter.
    """
    sys = SystemId(sys)
    info = SYSTEMS[sys]
    params = dict(params or {})
    missing = [n for n in required_fields(sys, variant) if n not in fields]
    if missing:
        raise KeyError(f"system {sys.value} needs fields {missing}")
    missing = [n for n in info.params if n not in params]
    if missing:
        raise KeyError(f"system {sys.value} needs parameters {missing}")
    fp = FieldPoint(fields, point, params)
    kwargs = {}
    if info.variants:
        v = variant or "verbatim"
        if v not in info.variants:
            raise ValueError(f"system {sys.value} has variants {info.variants}, got {v!r}")
        kwargs["variant"] = v
    elif variant not in (None, "verbatim"):
        raise ValueError(f"system {sys.value} has no variants")
    with np.errstate(all="raise"):
        try:
            out = info.fn(fp, params, **kwargs)
        except ZeroDivisionError as exc:
            raise SingularPointError(f"singular point in {sys.value}: {exc}") from exc
        except FloatingPointError as exc:
            raise EvaluationError(f"floating point error in {sys.value}: {exc}") from exc
    out = np.asarray(out)
    return out if np.iscomplexobj(out) else out.astype(float)


def residual_scan(
    sys: SystemId | str,
    fields: Mapping[str, Expr | str],
    params: Mapping[str, float] | None,
    plan,
    tol: float | None = None,
    variant: str | None = None,
    case: str = "",
):
    """Max-abs residual of ``sys`` over a sample plan.

    Singular points are skipped and counted.  The scan passes iff the maximum
    is within ``tol`` and at least half of the points were non-singular.
    """
    from .reports import DEFAULT_TOL, NoValidPointsError, Report, map_points

    sys = SystemId(sys)
    tol = DEFAULT_TOL if tol is None else tol
    fields = {k: as_expr(v) for k, v in fields.items()}
    pts = plan.points(COORDS)

    def one(p):
        try:
            return float(np.max(np.abs(residual_at(sys, fields, params, p, variant))))
        except SingularPointError as exc:
            return exc

    results = map_points(one, pts)
    good = [r for r in results if isinstance(r, float)]
    bad = [r for r in results if not isinstance(r, float)]
    if not good:
        raise NoValidPointsError(f"every point of the plan is singular for {sys.value} ({bad[0]})")
    check = sys.value if variant in (None, "verbatim") else f"{sys.value}[{variant}]"
    report = Report(case, f"residual:{check}", tol, good, len(good), notes=[plan.describe()])
    if bad:
        report.skipped = len(bad)
        report.notes.append(f"skipped {len(bad)} singular points: {bad[0]}")
    if 2 * len(good) < len(results):
        report.failure = "fewer than half of the points were non-singular"
        report.notes.append(report.failure)
    return report
