import numpy as np
import pytest

from legendrian_lift.errors import IntegrationError
from legendrian_lift.ode import integrate


def test_complex_exponential():
    sol = integrate(lambda t, y: 1j * y, 0.0, 2 * np.pi, 1.0 + 0j,
                    rtol=1e-12, atol=1e-14)
    assert sol.y_end == pytest.approx(1.0 + 0j, abs=1e-10)


def test_dense_output_accuracy():
    # cubic Hermite between accepted steps: error ~ (h^4 / 384) |y''''|
    sol = integrate(lambda t, y: -0.5 * y, 0.0, 4.0, 2.0 + 0j,
                    rtol=1e-11, atol=1e-13, max_step=0.05)
    ts = np.linspace(0.1, 3.9, 40)
    exact = 2.0 * np.exp(-0.5 * ts)
    assert np.abs(sol(ts) - exact).max() <= 1e-8


def test_derivative_interpolation():
    # Hermite derivative is one order lower than the position interpolant
    sol = integrate(lambda t, y: np.cos(t) + 0j, 0.0, 3.0, 0j,
                    rtol=1e-11, atol=1e-13, max_step=0.05)
    ts = np.linspace(0.2, 2.8, 20)
    assert np.abs(sol.derivative(ts) - np.cos(ts)).max() <= 1e-5


def test_stop_condition_halts_run():
    sol = integrate(lambda t, y: 1.0 + 0j, 0.0, 10.0, 0j,
                    rtol=1e-9, atol=1e-12, max_step=0.1,
                    stop_condition=lambda t, y: y.real > 0.5)
    assert sol.stopped
    assert sol.t_end < 10.0
    assert sol.y_end.real > 0.5


def test_tightening_tolerance_moves_endpoint_less_than_budget():
    def rhs(t, y):
        return np.sin(3 * t) * y

    loose = integrate(rhs, 0.0, 5.0, 1.0 + 0j, rtol=1e-11, atol=1e-13)
    tight = integrate(rhs, 0.0, 5.0, 1.0 + 0j, rtol=1e-12, atol=1e-14)
    assert abs(loose.y_end - tight.y_end) <= 1e-9 * (1 + abs(tight.y_end))


def test_step_count_guard():
    with pytest.raises(IntegrationError):
        integrate(lambda t, y: y, 0.0, 1.0, 1.0 + 0j, rtol=1e-13, atol=1e-15,
                  max_steps=10)


def test_requires_forward_interval():
    with pytest.raises(ValueError):
        integrate(lambda t, y: y, 1.0, 0.0, 1.0 + 0j)
