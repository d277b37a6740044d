"""Acceptance criteria 1-7, one test and one printed PASS/FAIL line each.

The lines are collected in conftest and repeated in the terminal summary.
"""

import functools
import time

import numpy as np
import sympy as sp
from conftest import CASES_DIR, corpus_metric_files, plan_of, record_criterion
from test_jets import ELEMENTARY, POWERS, _fd_agreement
from test_residuals import transcription_error
from test_tensor import _bianchi_2

from curvlab.corpus import get_case, run_case
from curvlab.dsl import parse_metric_file
from curvlab.extension import PSI, extend
from curvlab.reports import SamplePlan
from curvlab.residuals import SystemId, residual_scan
from curvlab.tensor import bundle_at, check_bundle_identities, cs_density_at
from curvlab.verdicts import check_constant_curvature, check_cs_vanishing


def _file(name: str):
    return parse_metric_file((CASES_DIR / name).read_text())


@functools.cache
def _results(case: str) -> dict:
    return {r.label: r for r in run_case(get_case(case))}


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def test_criterion_1_constant_curvature_reproductions():
    parts, ok = [], True
    for fname, lam in (("sphere_l1.metric", 1.0), ("hyperbolic_lm1.metric", -1.0)):
        mf = _file(fname)
        r, dt = _timed(check_constant_curvature, mf.metric, lam, plan_of(mf))
        good = r.passed and r.n_points == 64 and r.max_abs_residual < 1e-9 and dt < 1.0
        ok &= good
        parts.append(f"{fname} lambda={lam:g}: max {r.max_abs_residual:.1e} over {r.n_points} pts in {dt:.2f} s")
    mf = _file("hyperbolic_lm1.metric")
    r, dt = _timed(check_constant_curvature, mf.metric, "estimate", plan_of(mf))
    good = r.passed and abs(r.lam + 1.0) < 1e-9 and r.lambda_spread < 1e-9 and dt < 1.0
    ok &= good
    parts.append(f"estimate {r.lam:.12f} spread {r.lambda_spread:.1e} in {dt:.2f} s")
    assert record_criterion(1, ok, "; ".join(parts))


def _raw_max_riemann(metric, plan) -> float:
    return max(float(np.max(np.abs(bundle_at(metric, p).riemann_low))) for p in plan.points(metric.coords))


def test_criterion_2_flat_kdv_metrics():
    parts, ok = [], True
    for mname, fname in (("kdv1_flat.metric", "kdv1.fields"), ("kdv2_flat.metric", "kdv2.fields")):
        mf, ff = _file(mname), _file(fname)
        r_max = _raw_max_riemann(mf.metric, plan_of(mf))
        res = residual_scan("kdv", ff.fields, ff.params, plan_of(ff), tol=1e-9)
        good = r_max < 1e-8 and res.passed and res.max_abs_residual < 1e-9
        ok &= good
        parts.append(f"{mname}: max|R| {r_max:.1e}, KdV residual {res.max_abs_residual:.1e}")
    # the one-soliton profile solves -4 s''' - 48 s s' + 16 s' = 0 exactly
    x = sp.symbols("x")
    s = sp.sech(x) ** 2
    ident = sp.simplify((-4 * sp.diff(s, x, 3) - 48 * s * sp.diff(s, x) + 16 * sp.diff(s, x)).rewrite(sp.exp))
    ok &= ident == 0
    parts.append(f"sech^2 identity simplifies to {ident}")
    assert record_criterion(2, ok, "; ".join(parts))


def _signs(g: np.ndarray) -> tuple:
    return tuple(int(v) for v in np.sign(np.linalg.eigvalsh(np.real(g))))


def test_criterion_3_riemann_extension():
    t0 = time.perf_counter()
    base = _file("hyperbolic_lm1.metric")
    six = extend(base.metric)
    plan = SamplePlan({**plan_of(base).boxes, **{p: (-1.0, 1.0) for p in PSI}}, n_points=8)
    nabla_max, r_min = 0.0, np.inf
    for p in plan.points(six.coords):
        b = bundle_at(six, p, nabla_r=True)
        nabla_max = max(nabla_max, float(np.max(np.abs(b.nabla_riemann))))
        r_min = min(r_min, float(np.max(np.abs(b.riemann_low))))
    ok = nabla_max < 1e-8 and r_min > 0.1
    parts = [f"extension of hyperbolic_lm1: max|nabla R| {nabla_max:.1e}, min over points of max|R| {r_min:.2f}"]

    flat_base = _file("ext_flat.metric")
    six = extend(flat_base.metric)
    plan = SamplePlan({**plan_of(flat_base).boxes, **{p: (-1.0, 1.0) for p in PSI}}, n_points=8)
    r_max, signs = 0.0, set()
    for p in plan.points(six.coords):
        b = bundle_at(six, p)
        r_max = max(r_max, float(np.max(np.abs(b.riemann_low))))
        signs.add(tuple(sorted(_signs(b.g))))
    ok &= r_max < 1e-8 and signs == {(-1, -1, -1, 1, 1, 1)}
    dt = time.perf_counter() - t0
    ok &= dt < 30.0
    parts.append(f"extension of ext_flat: max|R| {r_max:.1e}, eigenvalue signs {sorted(signs)}; {dt:.1f} s")
    assert record_criterion(3, ok, "; ".join(parts))


CS_FORMS = ("example", "family")


def test_criterion_4_chern_simons():
    parts = []
    zero_ok = True
    for fname in ("hyperbolic_lm1.metric", "liouville_metric.metric"):
        mf = _file(fname)
        worst = max(abs(cs_density_at(mf.metric, p)) for p in plan_of(mf).points(mf.metric.coords))
        zero_ok &= worst < 1e-9
        parts.append(f"{fname}: max|CS| {worst:.1e}")

    matched, discrepancies = [], []
    for case in ("kdv1_flat", "kdv_linear_example1"):
        res = _results(case)
        for form in CS_FORMS:
            hits = [v for v in ("raw", "normalized") if res[f"cs {v} vs {form} closed form"].report.passed]
            if hits:
                matched.append(f"{case} {form} form matches the {hits[0]} density")
            else:
                notes = [res[f"cs {v} vs {form} closed form"].report.notes[-1] for v in ("raw", "normalized")]
                discrepancies.append((case, form, notes))
    if not discrepancies:
        ok = zero_ok
        parts.extend(matched)
    else:
        # fallback: every mismatch must be recorded and the vanishing condition cross-checks must pass
        recorded = all("closed form" in n for _, _, notes in discrepancies for n in notes)
        half = SamplePlan({"x": (-2, 2), "y": (-2, 2), "z": (0.2, 2)}, n_points=16)
        box = SamplePlan({"x": (-1, 1), "y": (-1, 1), "z": (-1, 1)}, n_points=16)
        cross = [check_cs_vanishing("1/z", "1/z", "1/z", half), check_cs_vanishing("exp(x)", "exp(y)", "exp(z)", box)]
        density_zero = float(np.max(np.abs(cross[0].extra["cs_cross"][:, :2]))) < 1e-9
        ok = zero_ok and recorded and all(r.passed for r in cross) and density_zero
        parts.extend(matched)
        for case, form, notes in discrepancies:
            constant = [n for n in notes if " x " in n and "varies" not in n]
            parts.append(f"{case} {form} form: no variant matches ({constant[0] if constant else notes[0]})")
        parts.append(f"vanishing-condition cross-checks {'pass' if all(r.passed for r in cross) else 'fail'}")
    assert record_criterion(4, ok, "; ".join(parts))


def test_criterion_5_lambda_quarter_case():
    res = _results("sec4_lambda_quarter")
    cc = res["constant curvature lambda=1/4"].report
    ricci = res["ricci = 2 lambda g"].report
    shown = res["ricci R11, R22, R33 vs displayed"].report
    r12 = res["ricci R12 vs displayed X/4"].report
    ok = cc.passed and cc.max_abs_residual < 1e-8 and ricci.passed and ricci.tol <= 1e-9 and shown.passed
    detail = (
        f"curvature residual {cc.max_abs_residual:.1e}; Ricci - 2 lambda g {ricci.max_abs_residual:.1e}; "
        f"diagonal Ricci vs displayed {shown.max_abs_residual:.1e}; R12 vs X/4 recorded as {r12.verdict}"
    )
    assert record_criterion(5, ok, detail)


CLAIMED = [
    ("sg_chebyshev", "sine_gordon residual lambda=-1"),
    ("sg_chebyshev", "sg_linear residual lambda=-1"),
    ("liouville_metric", "liouville residual, printed solution"),
    ("gen_darboux_exp", "gen_darboux residual"),
]
# (case, oracle check, frozen baseline)
DERIVED = [
    ("normal_abc", "fd oracle darboux", "darboux residual"),
    ("sphere_Axyz", "fd oracle lambda=-1", "constant curvature lambda=-1"),
    ("sphere_Axyz", "fd oracle lambda=0.5", "constant curvature lambda=0.5"),
    ("liouville_metric", "fd oracle lambda=1, U fixed, minus", "constant curvature lambda=1, U fixed, minus"),
]


def test_criterion_6_residual_suite():
    parts, ok = [], True
    errs = {s.value: transcription_error(s.value) for s in SystemId}
    bad = sorted(k for k, (err, n) in errs.items() if err > 1e-10 or n < 4)
    ok &= not bad
    parts.append(f"{len(errs) - len(bad)}/{len(errs)} systems match sympy to 1e-10")
    for case, label in CLAIMED:
        rep = _results(case)[label].report
        good = rep.passed and rep.max_abs_residual < 1e-8
        ok &= good
        if not good:
            parts.append(f"{case} '{label}' residual {rep.max_abs_residual:.3g}")
    n_claimed = sum(_results(c)[lab].report.passed for c, lab in CLAIMED)
    parts.append(f"{n_claimed}/{len(CLAIMED)} claimed solutions below 1e-8")
    confirmed = sum(_results(c)[o].report.passed and _results(c)[b].report.passed for c, o, b in DERIVED)
    ok &= confirmed == len(DERIVED)
    parts.append(f"{confirmed}/{len(DERIVED)} derived baselines confirmed by the finite-difference oracle")
    assert record_criterion(6, ok, "; ".join(parts))


def test_criterion_7_kernel_invariants():
    worst_ident, worst_bianchi, worst_inv = 0.0, 0.0, 0.0
    for _, mf in corpus_metric_files():
        for p in plan_of(mf, n_points=2).points(mf.metric.coords):
            b = bundle_at(mf.metric, p, nabla_r=True)
            worst_ident = max(worst_ident, *check_bundle_identities(b).values())
            scale = max(1.0, float(np.max(np.abs(b.nabla_riemann))), float(np.max(np.abs(b.g))) ** 2)
            worst_bianchi = max(worst_bianchi, float(np.max(np.abs(_bianchi_2(b.nabla_riemann)))) / scale)
            worst_inv = max(worst_inv, float(np.max(np.abs(b.g @ b.g_inv - np.eye(len(b.g))))))
    fd = [
        _fd_agreement(fn + "({u})", f, lo, hi, sorted(ELEMENTARY).index(fn)) for fn, (f, (lo, hi)) in ELEMENTARY.items()
    ]
    fd += [_fd_agreement("{u}" + s, lambda u, k=k: u**k, 0.5, 2.5, 7) for s, k in POWERS.items()]
    ok = worst_ident < 1e-9 and worst_bianchi < 1e-8 and worst_inv < 1e-9 and max(fd) < 1e-6
    detail = (
        f"identities {worst_ident:.1e}, Bianchi II {worst_bianchi:.1e}, g g^-1 - I {worst_inv:.1e}; "
        f"jet vs FD worst relative {max(fd):.1e} over {len(fd)} functions x 100 points"
    )
    assert record_criterion(7, ok, detail)
