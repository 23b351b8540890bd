import numpy as np
import pytest

from legendrian_lift import expr as ex


def test_zero_literal():
    assert ex.evaluate(ex.parse("0"), (1.0, 2.0, 3.0)) == 0


def test_complex_quotient_at_origin():
    val = ex.evaluate(ex.parse("(x^2+1)/(y-3*i)"), (0, 0, 0))
    assert val == pytest.approx(1j / 3, rel=1e-15)


def test_linear_substitution():
    assert ex.evaluate(ex.parse("-y/2"), (1.0, 2.0, 5.0)) == -1.0


def test_product_with_imaginary_point():
    assert ex.evaluate(ex.parse("x*y + z"), (1.0, 1j, 0.0)) == 1j


def test_scaling_along_axis():
    for r in (0.25, 1.0, 7.5):
        assert ex.evaluate(ex.parse("x/2"), (r, 0, 0)) == r / 2


def test_division_by_zero_names_subexpression():
    with pytest.raises(ex.DivisionByZero) as err:
        ex.evaluate(ex.parse("1/x"), (0.0, 1.0, 1.0))
    assert "x" in str(err.value)


def test_negative_power_of_zero_is_division_by_zero():
    with pytest.raises(ex.DivisionByZero):
        ex.evaluate(ex.parse("x^-2"), (0.0, 1.0, 1.0))


def test_syntax_error_carries_position():
    with pytest.raises(ex.ExprSyntaxError) as err:
        ex.parse("x + * y")
    assert err.value.position == 4


def test_non_integer_exponent_rejected():
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse("x^2.5")
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse("x^y")


def test_unknown_identifier_rejected():
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse("x + w")


def test_imaginary_unit_is_literal_not_variable():
    assert ex.evaluate(ex.parse("i*i"), (0, 0, 0)) == -1
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse("2i")          # juxtaposition is not multiplication


def test_power_binds_tighter_than_unary_minus():
    assert ex.evaluate(ex.parse("-y^2"), (0, 3.0, 0)) == -9.0


def test_negative_exponent():
    assert ex.evaluate(ex.parse("2^-2"), (0, 0, 0)) == 0.25


def test_whitespace_insensitive():
    a = ex.parse(" ( x ^ 2+ 1 ) / (y - 3 * i)")
    b = ex.parse("(x^2+1)/(y-3*i)")
    pt = (1.25, -0.5j, 0)
    assert ex.evaluate(a, pt) == ex.evaluate(b, pt)


def test_derivative_of_linear_terms():
    half = ex.derivative(ex.parse("x/2"), "x")
    assert ex.evaluate(half, (3.7, 0, 0)) == 0.5
    neg_half = ex.derivative(ex.parse("-y/2"), "y")
    assert ex.evaluate(neg_half, (0, 11.0, 0)) == -0.5


def test_derivative_power_rule():
    d = ex.derivative(ex.parse("x*z^2"), "z")
    assert ex.evaluate(d, (2.0, 0.0, 3.0)) == 12.0


def test_contact_twist_is_one_pointwise():
    p = ex.parse("-y/2")
    q = ex.parse("x/2")
    diff = ex.Sub(ex.derivative(q, "x"), ex.derivative(p, "y"))
    rng = np.random.default_rng(3)
    for _ in range(100):
        pt = rng.uniform(-2, 2, 6).view(complex)
        assert abs(ex.evaluate(diff, pt) - 1.0) <= 1e-12


_CORPUS = (
    "-y/2", "x/2", "-y/2 + z^2/10", "x/2 + x*z/20",
    "(x^2+1)/(y-3*i)", "x*y*z - z^3/(1+x^2)",
    "(x-2*i*y)^3/(z^2+4)", "1/(x*y - z + 5)", "-(x+i)^-2",
)


@pytest.mark.parametrize("text", _CORPUS)
def test_derivative_matches_finite_differences(text):
    e = ex.parse(text)
    rng = np.random.default_rng(11)
    h = 1e-5
    done = 0
    while done < 100:
        pt = rng.uniform(-1.5, 1.5, 6).view(complex)
        try:
            for k, var in enumerate(("x", "y", "z")):
                step = np.zeros(3, dtype=complex)
                step[k] = h
                fd = (ex.evaluate(e, pt + step) - ex.evaluate(e, pt - step)) / (2 * h)
                sym = ex.evaluate(ex.derivative(e, var), pt)
                assert abs(sym - fd) / (1.0 + abs(sym)) <= 1e-6
        except ex.DivisionByZero:
            continue
        done += 1


@pytest.mark.parametrize("text", _CORPUS)
def test_render_parse_roundtrip_is_exact(text):
    e = ex.parse(text)
    again = ex.parse(ex.render(e))
    rng = np.random.default_rng(5)
    for _ in range(100):
        pt = rng.uniform(-1.5, 1.5, 6).view(complex)
        try:
            expected = ex.evaluate(e, pt)
        except ex.DivisionByZero:
            continue
        assert ex.evaluate(again, pt) == expected


def test_roundtrip_of_derivatives():
    e = ex.derivative(ex.parse("(x-2*i*y)^3/(z^2+4)"), "x")
    again = ex.parse(ex.render(e))
    pt = (0.3, -1.2, 0.7 + 0.1j)
    assert ex.evaluate(again, pt) == ex.evaluate(e, pt)


def test_compiled_matches_interpreted():
    e = ex.parse("(x-2*i*y)^3/(z^2+4) - y/2")
    fn = ex.compile_fn(e)
    rng = np.random.default_rng(7)
    for _ in range(50):
        x, y, z = (complex(c) for c in rng.uniform(-1, 1, 6).view(complex))
        assert fn(x, y, z) == ex.evaluate(e, (x, y, z))


def test_compiled_accepts_arrays():
    e = ex.parse("x*z^2 - y/2")
    fn = ex.compile_fn(e)
    xs = np.linspace(0, 1, 5) + 0j
    vals = fn(xs, 2 * xs, xs)
    expected = [ex.evaluate(e, (x, 2 * x, x)) for x in xs]
    assert np.allclose(vals, expected, rtol=0, atol=0)


def test_uses_variable():
    e = ex.parse("x/2 + x*z/20")
    assert ex.uses_variable(e, "z")
    assert ex.uses_variable(e, "x")
    assert not ex.uses_variable(e, "y")
