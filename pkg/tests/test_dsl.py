import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.dsl import (
    FUNCTIONS,
    Bin,
    Call,
    Deriv,
    Evaluator,
    MetricSpec,
    Neg,
    Num,
    Var,
    eval_float,
    format_metric_file,
    parse_expr,
    parse_metric_file,
    to_text,
)
from curvlab.errors import MetricFileError, ParseError

leaves = st.one_of(
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.sampled_from(["x", "y", "z", "lam"]).map(Var),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: Bin(*t)),
        st.tuples(st.sampled_from(FUNCTIONS), children).map(lambda t: Call(*t)),
        st.tuples(children, st.sampled_from(["x", "y", "z"])).map(lambda t: Deriv(*t)),
    )


expressions = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(expressions)
def test_print_parse_round_trip(e):
    assert parse_expr(to_text(e)) == e


@pytest.mark.parametrize(
    "text, value",
    [
        ("-x^2", -9.0),
        ("2^3^2", 512.0),
        ("x-2-1", 0.0),
        ("x/3/2", 0.5),
        ("-2*-x", 6.0),
        ("1e-3*x", 0.003),
        ("csgn(-x)", -1.0),
        ("exp(ln(x))", 3.0),
        ("diff(x^3, x)", 27.0),
        ("diff(diff(x^3*y, x), y)", 27.0),
    ],
)
def test_precedence_and_associativity(text, value):
    assert eval_float(parse_expr(text), {"x": 3.0, "y": 1.0}) == pytest.approx(value)


@pytest.mark.parametrize("text", ["x+", "(x", "sin x", "2**3", "foo(x)", "diff(x, 2)", "x y", "3 $ 4", ""])
def test_malformed_expressions(text):
    with pytest.raises(ParseError):
        parse_expr(text)


def test_parse_error_reports_offset():
    with pytest.raises(ParseError) as info:
        parse_expr("x + * y")
    assert info.value.offset == 4


def test_parameters_bind_after_coordinates():
    e = parse_expr("lam*x^2")
    assert eval_float(e, {"x": 2.0}, {"lam": -0.5}) == -2.0


def test_derivative_node_evaluates_to_its_jet():
    # diff(sin(x*y), x) = y cos(xy); its y-derivative is cos(xy) - xy sin(xy)
    ev = Evaluator(("x", "y"), (0.4, 0.9), 2)
    j = ev(parse_expr("diff(sin(x*y), x)"))
    xy = 0.36
    assert j.value == pytest.approx(0.9 * math.cos(xy))
    assert j.coeffs[2] == pytest.approx(math.cos(xy) - xy * math.sin(xy))


FILE = """
# comment line
[space]
coords = x y z

[params]
a = 2
b = a^2        # params may refer to earlier ones

[metric]
g 1 1 = a/z^2
g 1 2 = x*y
g 2 2 = 1/z^2
g 3 3 = b/z^2

[fields]
U = ln(x)
w 1 = y
w 3 = z

[plan]
z = 0.5 1
points = 8
"""


def test_metric_file_parses_symmetrically():
    mf = parse_metric_file(FILE)
    assert mf.coords == ("x", "y", "z")
    assert mf.params == {"a": 2.0, "b": 4.0}
    g = mf.metric.evaluate((1.0, 2.0, 0.5), 0)[..., 0]
    np.testing.assert_allclose(g, [[8.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 16.0]])
    assert mf.forms["w"][1] == Num(0.0)
    assert mf.plan["points"] == "8"


def test_metric_file_format_round_trip():
    mf = parse_metric_file(FILE)
    again = parse_metric_file(format_metric_file(mf))
    assert again.coords == mf.coords and again.params == mf.params and again.plan == mf.plan
    p = (0.3, 0.7, 0.9)
    np.testing.assert_allclose(again.metric.evaluate(p, 1), mf.metric.evaluate(p, 1))


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[metric]\ng 1 1 = 1", "before coords"),
        ("[space]\ncoords = x y z\n[metric]\ng 1 2 = x\ng 2 1 = x", "duplicate entry g 1 2"),
        ("[space]\ncoords = x y z\n[metric]\ng 1 4 = 1", "out of range"),
        ("[space]\ncoords = x y z\n[metric]\ng 1 1 = (x", "line 4"),
        ("[space]\ncoords = x y z\n[stuff]\n", "unknown section"),
        ("[space]\ncoords = x x z\n", "repeated coordinate"),
        ("[space]\ncoords = x y\n[metric]\ng 1 1 = 1", "3 or 6 coordinates"),
        ("coords = x y z", "outside of any section"),
        ("[params]\na = 1", "missing 'coords"),
        ("[space]\ncoords = x y z\n[fields]\nU = 1\nU = 2", "duplicate field"),
    ],
)
def test_metric_file_errors(text, fragment):
    with pytest.raises(MetricFileError) as info:
        parse_metric_file(text)
    assert fragment in str(info.value)


def test_relabel_renames_coordinates_inside_expressions():
    m = MetricSpec.diagonal(("x", "y", "z"), [parse_expr("z^2"), parse_expr("1"), parse_expr("x")])
    r = m.relabel({"x": "u", "y": "v", "z": "w"})
    assert r.coords == ("u", "v", "w")
    np.testing.assert_allclose(r.evaluate((2.0, 0.0, 3.0), 0), m.evaluate((2.0, 0.0, 3.0), 0))
