import numpy as np
import pytest

from legendrian_lift import geometry as geo
from legendrian_lift.errors import PoleOnPathError, QuadratureError
from legendrian_lift.foliation import compute_orbit


def test_unit_circle_length():
    assert geo.length(geo.circle_path(0, 1.0)) == pytest.approx(2 * np.pi, abs=1e-9)


def test_segment_length():
    assert geo.length(geo.line_segment([0, 0], [3, 4])) == pytest.approx(5.0, abs=1e-12)


@pytest.mark.parametrize("r", [0.5, 0.25])
def test_orbit_length_scales_linearly(r):
    unit = geo.length(compute_orbit(1.0).path())
    scaled = geo.length(compute_orbit(r).path())
    assert scaled / unit == pytest.approx(r, rel=1e-10)


def test_residue_integral_around_unit_circle():
    val = geo.contour_integral(lambda p, v: v[0] / p[0], geo.circle_path(0, 1.0))
    assert val == pytest.approx(2j * np.pi, abs=1e-9)


def test_exact_form_integrates_to_zero_on_loops():
    # d(t^2) = 2 t dt over a closed loop
    val = geo.contour_integral(lambda p, v: 2 * p[0] * v[0], geo.circle_path(1 + 1j, 2.0))
    assert abs(val) <= 1e-9


def test_reverse_flips_the_integral():
    loop = geo.circle_path(0.3j, 1.5)
    form = lambda p, v: v[0] / (p[0] - 0.1)
    fwd = geo.contour_integral(form, loop)
    bwd = geo.contour_integral(form, loop.reverse())
    assert abs(fwd + bwd) <= 1e-10


def test_integral_additive_under_concat():
    first = geo.line_segment([0, 0], [1, 0.5])
    second = geo.line_segment([1, 0.5], [1 + 1j, -0.25])
    form = lambda p, v: p[0] * v[0] + (p[1] ** 2) * v[1]
    total = geo.contour_integral(form, first.concat(second))
    split = (geo.contour_integral(form, first) + geo.contour_integral(form, second))
    assert total == pytest.approx(split, abs=1e-12)


def test_reverse_twice_traverses_same_points():
    path = compute_orbit(1.0).path()
    double = path.reverse().reverse()
    for s in np.linspace(path.a, path.b, 33):
        assert np.allclose(double(s), path(s), rtol=0, atol=1e-14)


def test_length_additive_under_concat():
    a = geo.line_segment([0, 0], [1, 1])
    b = geo.line_segment([1, 1], [2, 0])
    assert geo.length(a.concat(b)) == pytest.approx(geo.length(a) + geo.length(b),
                                                    abs=1e-10)


def test_winding_numbers_for_unit_circle():
    loop = geo.circle_path(0, 1.0)
    assert geo.winding_number(loop, 0) == 1
    assert geo.winding_number(loop, 3.0) == 0


def test_winding_for_shifted_circle():
    loop = geo.circle_path(3j, 3.0)      # contains i and 3i, not -i
    assert geo.winding_number(loop, 1j) == 1
    assert geo.winding_number(loop, -1j) == 0


def test_winding_invariant_under_reparametrization():
    def pos(u):
        return np.array([np.exp(2j * np.pi * u * u)])

    def vel(u):
        return np.array([4j * np.pi * u * np.exp(2j * np.pi * u * u)])

    quadratic_speed = geo.from_callable(pos, vel, 0.0, 1.0)
    assert geo.winding_number(quadratic_speed, 0) == 1
    assert geo.winding_number(quadratic_speed, 0.2 - 0.4j) == 1
    assert geo.winding_number(quadratic_speed, 1.7) == 0


def test_point_on_path_rejected():
    loop = geo.circle_path(0, 1.0)
    with pytest.raises(PoleOnPathError):
        geo.winding_number(loop, 1.0)


def test_pole_on_path_in_contour_integral():
    # pole sits at the path start: between samples it shows up as quadrature
    # divergence (PoleOnPathError is a QuadratureError subclass)
    loop = geo.circle_path(0, 1.0)
    with pytest.raises(QuadratureError):
        geo.contour_integral(lambda p, v: v[0] / (p[0] - 1.0), loop)


def test_non_finite_sample_reported_as_pole():
    seg = geo.line_segment([0, 0], [1, 0])
    with pytest.raises(PoleOnPathError):
        geo.contour_integral(lambda p, v: np.inf, seg)


def test_open_path_has_no_winding():
    arc = geo.from_callable(lambda s: np.array([np.exp(1j * s)]),
                            lambda s: np.array([1j * np.exp(1j * s)]),
                            0.0, np.pi)
    with pytest.raises(ValueError):
        geo.winding_number(arc, 0)


def test_velocity_matches_position_differences():
    path = compute_orbit(1.0).path()
    h = 1e-6
    for s in np.linspace(0.3, path.b - 0.3, 17):
        fd = (path(s + h) - path(s - h)) / (2 * h)
        vel = path.velocity(s)
        assert np.abs(fd - vel).max() / (1 + np.abs(vel).max()) <= 1e-6


def test_polydisc_membership():
    disc = geo.Polydisc.centered((1.0, 2.0, 0.5))
    assert disc.contains((0.5, -1.5j, 0.25))
    assert not disc.contains((1.5, 0, 0))
    assert disc.contains_xy((0.99, 1.99j))
    assert not disc.contains((0.95, 0, 0), margin=0.1)
