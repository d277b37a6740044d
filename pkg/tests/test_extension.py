import numpy as np
import pytest

from curvlab.dsl import Evaluator, MetricSpec, parse_expr
from curvlab.extension import PSI, Mode, christoffel_exprs, extend, modified_christoffel_exprs
from curvlab.reports import SamplePlan
from curvlab.tensor import bundle_at
from curvlab.verdicts import check_flat, check_symmetric

XYZ = ("x", "y", "z")
A_TXT, B_TXT, C_TXT = "2 + x*y + z^2/3", "1.5 + sin(x*z)", "3 + y*exp(x/4)"


def _diag_metric():
    return MetricSpec.diagonal(XYZ, [parse_expr(f"({t})^2") for t in (A_TXT, B_TXT, C_TXT)])


def _lame_connection(p):
    """Connection of diag(A^2, B^2, C^2) in closed form (principal components only)."""
    ev = Evaluator(XYZ, p, 1)
    jets = [ev(parse_expr(t)) for t in (A_TXT, B_TXT, C_TXT)]
    val = [j.value for j in jets]
    d = [[j.coeff(a) for a in ((1, 0, 0), (0, 1, 0), (0, 0, 1))] for j in jets]  # d[f][v]
    gam = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            if i == j:
                gam[i, i, i] = d[i][i] / val[i]
            else:
                # Gamma^i_ij = d_j H_i / H_i ; Gamma^i_jj = -H_j d_i H_j / H_i^2
                gam[i, i, j] = gam[i, j, i] = d[i][j] / val[i]
                gam[i, j, j] = -val[j] * d[j][i] / val[i] ** 2
    return gam


@pytest.mark.parametrize("p", [(0.1, 0.2, 0.3), (-0.5, 0.7, 0.2), (0.9, -0.3, -0.6)])
def test_connection_expressions_match_diagonal_closed_form(p):
    gam = christoffel_exprs(_diag_metric())
    ev = Evaluator(XYZ, p, 0)
    got = np.array([[[ev(gam[i][j][k]).value for k in range(3)] for j in range(3)] for i in range(3)])
    np.testing.assert_allclose(got, _lame_connection(p), atol=1e-12)
    # and they agree with the jet engine's connection
    np.testing.assert_allclose(got, bundle_at(_diag_metric(), p).gamma, atol=1e-12)


def test_modified_connection_adds_the_three_mixed_components():
    p = (0.1, 0.2, 0.3)
    ev = Evaluator(XYZ, p, 0)
    A, B, C = (ev(parse_expr(t)).value for t in (A_TXT, B_TXT, C_TXT))
    for imaginary, unit in ((False, 1.0), (True, 1j)):
        gam = modified_christoffel_exprs(_diag_metric(), imaginary)
        assert ev(gam[1][0][2]).value == pytest.approx(unit * C * A / B)
        assert ev(gam[2][1][0]).value == pytest.approx(unit * A * B / C)
        assert ev(gam[0][2][1]).value == pytest.approx(unit * B * C / A)
        assert ev(gam[0][0][0]).value == pytest.approx(_lame_connection(p)[0, 0, 0])


def test_euclidean_extension_is_flat_with_constant_cross_block():
    six = extend(MetricSpec.diagonal(XYZ, [parse_expr("1")] * 3))
    g = six.evaluate((0.3, 0.1, -0.2, 0.5, -1.0, 2.0), 0)[..., 0]
    np.testing.assert_array_equal(g[:3, :3], 0.0)
    np.testing.assert_array_equal(g[3:, 3:], 0.0)
    np.testing.assert_array_equal(g[:3, 3:], np.eye(3))
    plan = SamplePlan({c: (-1, 1) for c in XYZ + PSI}, n_points=8)
    assert check_flat(six, plan).max_abs_residual == 0.0


@pytest.mark.parametrize("mode", list(Mode))
def test_extension_is_linear_in_psi(mode):
    six = extend(_diag_metric(), mode)
    p = np.array([0.2, -0.1, 0.4])
    psi = np.array([0.3, -0.7, 1.1])
    g1 = six.evaluate(np.concatenate([p, psi]), 0)[..., 0]
    g2 = six.evaluate(np.concatenate([p, 2 * psi]), 0)[..., 0]
    g0 = six.evaluate(np.concatenate([p, 0 * psi]), 0)[..., 0]
    np.testing.assert_allclose(g2[:3, :3], 2 * g1[:3, :3], rtol=1e-13)
    np.testing.assert_array_equal(g0[:3, :3], 0)
    np.testing.assert_array_equal(g1[:3, 3:], g2[:3, 3:])
    np.testing.assert_allclose(g1, g1.T)


def test_extension_commutes_with_renaming_coordinates():
    base = _diag_metric()
    renamed = base.relabel({"x": "u", "y": "v", "z": "w"})
    p = (0.2, -0.1, 0.4, 0.3, -0.7, 1.1)
    np.testing.assert_allclose(
        extend(renamed).evaluate(p, 1),
        extend(base).relabel({"x": "u", "y": "v", "z": "w"}).evaluate(p, 1),
        atol=1e-13,
    )


def test_flat_base_gives_flat_split_signature_extension():
    base = MetricSpec.diagonal(XYZ, [parse_expr("exp(2*x)"), parse_expr("1"), parse_expr("1")])
    six = extend(base)
    plan = SamplePlan({c: (-1, 1) for c in XYZ + PSI}, n_points=12)
    flat = check_flat(six, plan)
    assert flat.passed
    sym = check_symmetric(six, plan)
    assert sym.extra["signatures"] == [(-1, -1, -1, 1, 1, 1)]


def test_verbatim_cross_sign_breaks_symmetry_of_hyperbolic_extension():
    base = MetricSpec.diagonal(XYZ, [parse_expr("1/z^2")] * 3)
    plan = SamplePlan({"x": (-1, 1), "y": (-1, 1), "z": (0.5, 2), **{p: (-1, 1) for p in PSI}}, n_points=6)
    assert check_symmetric(extend(base), plan).passed
    assert not check_symmetric(extend(base, cross_sign=-1.0), plan).passed


def test_bad_inputs():
    with pytest.raises(ValueError, match="diagonal"):
        extend(MetricSpec.from_components(XYZ, {(0, 0): "1", (0, 1): "x", (1, 1): "1", (2, 2): "1"}), "mod+")
    with pytest.raises(ValueError, match="cross_sign"):
        extend(_diag_metric(), cross_sign=2.0)
    assert Mode.parse("modified(i)") is Mode.MODIFIED_IMAGINARY
    with pytest.raises(ValueError):
        Mode.parse("bogus")
