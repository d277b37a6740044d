"""Sampled pass/fail verdicts for global curvature claims."""

from __future__ import annotations

import numpy as np

from .dsl import Expr, MetricSpec, as_expr
from .errors import EvaluationError
from .reports import DEFAULT_TOL, NoValidPointsError, Report, SamplePlan, map_points
from .residuals import FieldPoint, residual_at
from .tensor import CurvatureBundle, bundle_at


def constant_curvature_tensor(g: np.ndarray) -> np.ndarray:
    """G_ijkl = g_ik g_jl - g_il g_jk."""
    return np.einsum("ik,jl->ijkl", g, g) - np.einsum("il,jk->ijkl", g, g)


def estimate_lambda(b: CurvatureBundle) -> float:
    """Least-squares lambda for R = lambda G at one point."""
    G = constant_curvature_tensor(b.g)
    return float(np.real(np.vdot(G, b.riemann_low) / np.vdot(G, G)))


def _scale(b: CurvatureBundle, with_r: bool = True) -> float:
    s = max(1.0, float(np.max(np.abs(b.g))) ** 2)
    if with_r:
        s = max(s, float(np.max(np.abs(b.riemann_low))))
    return s


def _bundles(m: MetricSpec, plan: SamplePlan, nabla_r=False, cs=False):
    pts = plan.points(m.coords)

    def one(p):
        try:
            return bundle_at(m, p, nabla_r=nabla_r, cs=cs)
        except EvaluationError as exc:
            return exc

    results = map_points(one, pts)
    good = [r for r in results if isinstance(r, CurvatureBundle)]
    bad = [r for r in results if not isinstance(r, CurvatureBundle)]
    if not good:
        raise NoValidPointsError(f"no point of the plan could be evaluated ({bad[0] if bad else 'empty'})")
    return good, bad


def _skip_note(report: Report, bad: list) -> None:
    if bad:
        report.skipped = len(bad)
        report.notes.append(f"skipped {len(bad)} points: {bad[0]}")


def check_constant_curvature(
    m: MetricSpec,
    lam: float | str,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
    case: str = "",
) -> Report:
    """Residual R_ijkl - lam (g_ik g_jl - g_il g_jk), scaled per point.

    ``lam="estimate"`` fits lambda per point and uses the mean of the fits.
    """
    bundles, bad = _bundles(m, plan)
    notes = [plan.describe()]
    spread = None
    if isinstance(lam, str):
        if lam != "estimate":
            raise ValueError(f"lambda must be a number or 'estimate', got {lam!r}")
        fits = np.array([estimate_lambda(b) for b in bundles])
        lam_used = float(np.mean(fits))
        spread = float(np.max(fits) - np.min(fits))
        notes.append(f"lambda estimated per point: mean {lam_used!r}, spread {spread:.3e}")
    else:
        lam_used = float(lam)
    per_point = []
    for b in bundles:
        t = b.riemann_low - lam_used * constant_curvature_tensor(b.g)
        per_point.append(float(np.max(np.abs(t))) / _scale(b))
    report = Report(
        case=case,
        check="constant_curvature",
        tol=tol,
        per_point=per_point,
        n_points=len(bundles),
        lam=lam_used,
        lambda_spread=spread,
        notes=notes,
    )
    report.extra["max_abs_riemann"] = max(float(np.max(np.abs(b.riemann_low))) for b in bundles)
    report.extra["max_ricci_identity"] = max(
        float(np.max(np.abs(b.ricci - (m.dim - 1) * lam_used * b.g))) / _scale(b) for b in bundles
    )
    _skip_note(report, bad)
    return report


def check_flat(m: MetricSpec, plan: SamplePlan, tol: float = DEFAULT_TOL, case: str = "") -> Report:
    """max |R_ijkl| over the plan, scaled by max(1, max|g|^2) per point."""
    bundles, bad = _bundles(m, plan)
    per_point = [float(np.max(np.abs(b.riemann_low))) / _scale(b, with_r=False) for b in bundles]
    report = Report(case, "flat", tol, per_point, len(bundles), lam=0.0, notes=[plan.describe()])
    report.extra["max_abs_riemann"] = max(float(np.max(np.abs(b.riemann_low))) for b in bundles)
    _skip_note(report, bad)
    return report


def check_symmetric(m: MetricSpec, plan: SamplePlan, tol: float = DEFAULT_TOL, case: str = "") -> Report:
    """max |nabla_m R_ijkl| over the plan, scaled by max(1, max|g|^2) per point."""
    bundles, bad = _bundles(m, plan, nabla_r=True)
    per_point = [float(np.max(np.abs(b.nabla_riemann))) / _scale(b, with_r=False) for b in bundles]
    report = Report(case, "symmetric", tol, per_point, len(bundles), notes=[plan.describe()])
    report.extra["max_abs_riemann"] = max(float(np.max(np.abs(b.riemann_low))) for b in bundles)
    report.extra["max_abs_nabla_riemann"] = max(float(np.max(np.abs(b.nabla_riemann))) for b in bundles)
    report.extra["signatures"] = sorted(
        {tuple(int(s) for s in np.sign(np.linalg.eigvalsh(np.real(b.g)))) for b in bundles}
    )
    _skip_note(report, bad)
    return report


def orthogonal_cs_formula(A: float, B: float, C: float, d: dict) -> float:
    """10 (A_y B_z C_x - A_z B_x C_y) / (A B C)."""
    return 10.0 * (d["A_y"] * d["B_z"] * d["C_x"] - d["A_z"] * d["B_x"] * d["C_y"]) / (A * B * C)


def check_cs_vanishing(
    A: Expr | str,
    B: Expr | str,
    C: Expr | str,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
    case: str = "",
    params=None,
) -> Report:
    """Orthogonal-metric Chern-Simons vanishing condition A_z B_x C_y - A_y B_z C_x = 0.

    Where the Darboux equations also hold at a point, the closed form for the
    density of diag(A^2, B^2, C^2) is compared with the computed density and the
    ratio is reported.
    """
    A, B, C = as_expr(A), as_expr(B), as_expr(C)
    params = dict(params or {})
    fields = {"A": A, "B": B, "C": C}
    pts = plan.points(("x", "y", "z"))
    metric = MetricSpec.diagonal(("x", "y", "z"), [A * A, B * B, C * C], params)

    def one(p):
        f = FieldPoint(fields, p, params)
        d = {f"{n}_{v}": f(n, v) for n in "ABC" for v in "xyz"}
        cond = d["A_z"] * d["B_x"] * d["C_y"] - d["A_y"] * d["B_z"] * d["C_x"]
        cross = None
        try:
            darb = residual_at("darboux", fields, params, p)
            if np.max(np.abs(darb)) <= 1e-8:
                b = bundle_at(metric, p, cs=True)
                cross = (b.cs, b.cs_normalized, orthogonal_cs_formula(f("A"), f("B"), f("C"), d))
        except EvaluationError:
            pass
        return abs(cond), cross

    results = map_points(one, pts)
    report = Report(case, "cs_vanishing", tol, [r[0] for r in results], len(results), notes=[plan.describe()])
    cross = np.array([r[1] for r in results if r[1] is not None])
    if len(cross):
        report.extra["cs_cross"] = cross
        report.notes.append(
            f"Darboux equations hold at {len(cross)} points; max |CS| = {np.max(np.abs(cross[:, 0])):.3e}, "
            f"max |closed form| = {np.max(np.abs(cross[:, 2])):.3e}"
        )
        for k, label in ((0, "raw"), (1, "normalized")):
            ratio = _constant_ratio(cross[:, 2], cross[:, k])
            if ratio is not None:
                report.extra[f"closed_form_over_{label}"] = ratio
                report.notes.append(f"closed form = {ratio:.6g} x {label} density at every cross-checked point")
    else:
        report.notes.append("Darboux equations do not hold on the plan; no density cross-check")
    return report


def _constant_ratio(num: np.ndarray, den: np.ndarray, rtol: float = 1e-8) -> float | None:
    """The common ratio num/den if it is the same at every point (zeros must coincide)."""
    num, den = np.real(num), np.real(den)
    scale = max(np.max(np.abs(num)), np.max(np.abs(den)), 1e-300)
    mask = np.abs(den) > 1e-9 * scale
    if not mask.any():
        return None
    r = num[mask] / den[mask]
    ratio = float(np.mean(r))
    if np.max(np.abs(r - ratio)) > rtol * max(1.0, abs(ratio)):
        return None
    if (~mask).any() and np.max(np.abs(num[~mask])) > 1e-9 * scale:
        return None
    return ratio


__all__ = [
    "check_constant_curvature",
    "check_cs_vanishing",
    "check_flat",
    "check_symmetric",
    "constant_curvature_tensor",
    "estimate_lambda",
]
