import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab import jets
from curvlab.dsl import Evaluator, parse_expr
from curvlab.fdoracle import central_partial
from curvlab.jets import Jet, JetDomainError, extract, jet_apply, lift_variable

# inner argument u(x, y) = a + 0.7 x - 0.4 y + 0.2 x y, shifted into each function's domain
ELEMENTARY = {
    "exp": (np.exp, (-2.0, 2.0)),
    "ln": (np.log, (0.5, 2.5)),
    "sqrt": (np.sqrt, (0.5, 2.5)),
    "sin": (np.sin, (-2.0, 2.0)),
    "cos": (np.cos, (-2.0, 2.0)),
    "tan": (np.tan, (-1.0, 1.0)),
    "atan": (np.arctan, (-2.0, 2.0)),
    "sinh": (np.sinh, (-2.0, 2.0)),
    "cosh": (np.cosh, (-2.0, 2.0)),
    "tanh": (np.tanh, (-2.0, 2.0)),
    "sign": (np.sign, (0.3, 2.0)),
}
POWERS = {"^2.5": 2.5, "^(-3)": -3.0, "^(1/3)": 1.0 / 3.0}
ALPHAS = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (1, 2)]


def _inner_text(shift: float) -> str:
    return f"({shift!r} + 0.7*x - 0.4*y + 0.2*x*y)"


def _inner(p, shift):
    x, y = p
    return shift + 0.7 * x - 0.4 * y + 0.2 * x * y


def _fd_agreement(text: str, outer, lo: float, hi: float, seed: int) -> float:
    """Worst relative jet-vs-FD error over 100 points whose inner argument lies in [lo, hi]."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        p = rng.uniform(-0.5, 0.5, size=2)
        shift = rng.uniform(lo + 0.4, hi - 0.4)
        e = parse_expr(text.format(u=_inner_text(shift)))
        jet = Evaluator(("x", "y"), p, 3)(e)
        for alpha in ALPHAS:
            fd = central_partial(lambda q, s=shift: outer(_inner(q, s)), p, alpha, h=2e-2)
            got = extract(jet, alpha)
            worst = max(worst, abs(got - fd) / max(1.0, abs(fd)))
    return worst


@pytest.mark.parametrize("fn", sorted(ELEMENTARY))
def test_elementary_jets_match_finite_differences(fn):
    outer, (lo, hi) = ELEMENTARY[fn]
    assert _fd_agreement(fn + "({u})", outer, lo, hi, seed=sorted(ELEMENTARY).index(fn)) < 1e-6


@pytest.mark.parametrize("suffix", sorted(POWERS))
def test_real_powers_match_finite_differences(suffix):
    k = POWERS[suffix]
    assert _fd_agreement("{u}" + suffix, lambda u: u**k, 0.5, 2.5, seed=7) < 1e-6


coeff_arrays = st.lists(st.floats(-3, 3, allow_nan=False), min_size=10, max_size=10).map(np.array)


@settings(max_examples=60, deadline=None)
@given(coeff_arrays, coeff_arrays)
def test_product_rule(a, b):
    ja, jb = Jet(3, 2, a), Jet(3, 2, b)
    sp1 = jets.space(3, 1)
    for v in range(3):
        lhs = (ja * jb).derivative(v)
        da, db = ja.derivative(v), jb.derivative(v)
        trunc_a = Jet(3, 1, a[: sp1.size])
        trunc_b = Jet(3, 1, b[: sp1.size])
        rhs = da * trunc_b + trunc_a * db
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(coeff_arrays, st.floats(0.2, 3.0), st.booleans())
def test_reciprocal_inverts(a, lead, negative):
    a = a.copy()
    a[0] = -lead if negative else lead
    j = Jet(3, 2, a)
    one = j * j.reciprocal()
    np.testing.assert_allclose(one.coeffs, np.eye(10)[0], atol=1e-9 * max(1.0, float(np.max(np.abs(a))) ** 3 / lead**3))


def test_coefficients_are_scaled_derivatives():
    # f = x^2 y at (1, 2): d2f/dx2 = 2y = 4, stored coefficient 4 / 2! = 2
    x = lift_variable(1.0, 0, 2, 3)
    y = lift_variable(2.0, 1, 2, 3)
    f = x * x * y
    assert f.coeff((2, 0)) == pytest.approx(2.0)
    assert extract(f, (2, 0)) == pytest.approx(4.0)
    assert extract(f, (2, 1)) == pytest.approx(2.0)
    assert extract(f, (0, 2)) == 0.0


def test_monomials_of_lower_degree_form_a_prefix():
    sp = jets.space(3, 3)
    assert all(sum(a) <= 1 for a in sp.indices[: sp.prefix(1)])
    assert sp.prefix(3) == sp.size == math.comb(6, 3)


def test_domain_errors():
    with pytest.raises(JetDomainError):
        jet_apply("ln", Jet.constant(-1.0, 1, 2))
    with pytest.raises(JetDomainError):
        jet_apply("sqrt", Jet.constant(0.0, 1, 2))
    with pytest.raises(JetDomainError):
        Jet.constant(1.0, 1, 1) / 0.0


def test_integer_power_of_negative_base():
    x = lift_variable(-2.0, 0, 1, 3)
    c = (x**3).coeffs
    np.testing.assert_allclose(c, [-8.0, 12.0, -6.0, 1.0])


def test_complex_jets_follow_analytic_continuation():
    # arccos(u) = i arccosh(u) for u > 1, via ln(u + sqrt(u^2 - 1))
    x = lift_variable(1.5, 0, 1, 2)
    w = jet_apply("ln", x + jet_apply("sqrt", x * x - 1.0)) * 1j
    assert np.cos(w.value) == pytest.approx(1.5)
    # d/du arccos(u) = -1/sqrt(1-u^2) = i / sqrt(u^2-1)
    assert w.coeffs[1] == pytest.approx(1j / math.sqrt(1.25))
