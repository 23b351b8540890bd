import numpy as np
import pytest

from legendrian_lift import analysis
from legendrian_lift import expr as ex
from legendrian_lift import foliation as fol
from legendrian_lift import lifting
from legendrian_lift.errors import CheckFailure


@pytest.fixture(scope="module")
def nu():
    return fol.length_bound()


@pytest.fixture(scope="module")
def contact_chart(nu):
    return lifting.make_chart(ex.parse("-y/2"), ex.parse("x/2"),
                              lifting.chart_domain(0.2, nu))


@pytest.fixture(scope="module")
def perturbed_chart(nu):
    return lifting.make_chart(ex.parse("-y/2 + z^2/10"), ex.parse("x/2 + x*z/20"),
                              lifting.chart_domain(0.05, nu))


@pytest.fixture(scope="module")
def unit_area():
    orbit = fol.compute_orbit(1.0)

    def shoelace(n):
        th = np.linspace(0.0, 2 * np.pi, n + 1)
        rho = orbit.rho(th)
        x, y = rho * np.cos(th), rho * np.sin(th)
        return 0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])

    return (4 * shoelace(1 << 15) - shoelace(1 << 14)) / 3


# --- displacement ------------------------------------------------------------

def test_displacement_is_area_times_r_squared(contact_chart, unit_area):
    for r in (0.02, 0.005):
        rec = analysis.displacement(contact_chart, r, 0.0)
        assert rec.delta == pytest.approx(r * r * unit_area, rel=1e-8)


def test_displacement_independent_of_height_when_z_free(contact_chart):
    a = analysis.displacement(contact_chart, 0.01, 0.0)
    b = analysis.displacement(contact_chart, 0.01, 0.05 + 0.02j)
    assert a.delta == b.delta


def test_displacement_depends_on_height_when_z_enters(perturbed_chart):
    a = analysis.displacement(perturbed_chart, 8e-4, 0.0)
    b = analysis.displacement(perturbed_chart, 8e-4, 0.004)
    assert a.delta != b.delta


def test_scan_slope_is_two(contact_chart):
    scan = analysis.displacement_scan(contact_chart,
                                      [2.0 ** -k for k in range(4, 11)], 0.0)
    assert scan.slope == pytest.approx(2.0, abs=0.01)
    assert not scan.warnings


def test_scan_band_is_two_sided(contact_chart):
    scan = analysis.displacement_scan(contact_chart, [0.01, 0.005, 0.0025], 0.0)
    for rec in scan.records:
        assert rec.r ** 2 / scan.c_est <= rec.abs_delta <= scan.c_est * rec.r ** 2


def test_scan_rejects_empty_radius_list(contact_chart):
    with pytest.raises(ValueError):
        analysis.displacement_scan(contact_chart, [], 0.0)


def test_scan_parallel_matches_serial(contact_chart, monkeypatch):
    radii = [0.01, 0.005, 0.0025]
    serial = analysis.displacement_scan(contact_chart, radii, 0.0)
    monkeypatch.setenv("LEGENDRIAN_LIFT_THREADS", "3")
    parallel = analysis.displacement_scan(contact_chart, radii, 0.0)
    assert [rec.delta for rec in serial.records] == \
        [rec.delta for rec in parallel.records]


# --- Stokes ------------------------------------------------------------------

def test_stokes_on_z_free_chart_reduces_to_area(contact_chart, unit_area):
    rec = analysis.stokes_cross_check(contact_chart, 0.01, 0.002)
    assert rec.surface_value == pytest.approx(1e-4 * unit_area, rel=1e-7)
    assert rec.stokes_gap <= 1e-7


def test_stokes_on_perturbed_chart(perturbed_chart):
    rec = analysis.stokes_cross_check(perturbed_chart, 8e-4, 0.004)
    assert rec.stokes_gap <= 1e-5


def test_stokes_gap_reported_relative(contact_chart):
    rec = analysis.stokes_cross_check(contact_chart, 0.01, 0.0)
    assert rec.stokes_gap == abs(rec.line_value - rec.surface_value) / abs(rec.line_value)


# --- Gronwall ----------------------------------------------------------------

def test_gronwall_equal_starts(perturbed_chart):
    base = fol.compute_orbit(8e-4).path()
    rep = analysis.gronwall_check(perturbed_chart, base, 0.003, 0.003)
    assert rep.sup_gap == 0.0
    assert rep.ok


def test_gronwall_constant_gap_when_z_free(contact_chart):
    base = fol.compute_orbit(0.01).path()
    rep = analysis.gronwall_check(contact_chart, base, 0.01, 0.012)
    # with M = 0 the two tracks differ by exactly the initial offset
    assert rep.sup_gap == pytest.approx(0.002, rel=1e-9)
    assert rep.max_ratio <= 1.0


def test_gronwall_random_pairs(perturbed_chart):
    base = fol.compute_orbit(8e-4).path()
    grid = analysis.base_length_grid(base)
    rng = np.random.default_rng(31)
    for _ in range(20):
        u, v = rng.uniform(-0.015, 0.015, 4).view(complex)
        rep = analysis.gronwall_check(perturbed_chart, base, complex(u), complex(v),
                                      grid=grid)
        assert rep.ok


def test_gronwall_envelope_violation_raises(perturbed_chart):
    base = fol.compute_orbit(8e-4).path()
    doctored = lifting.DistributionChart(
        P=perturbed_chart.P, Q=perturbed_chart.Q, domain=perturbed_chart.domain,
        P_y=perturbed_chart.P_y, Q_x=perturbed_chart.Q_x,
        P_z=perturbed_chart.P_z, Q_z=perturbed_chart.Q_z,
        epsilon=perturbed_chart.epsilon, M=-1.0,
        p_fn=perturbed_chart.p_fn, q_fn=perturbed_chart.q_fn,
        p_y_fn=perturbed_chart.p_y_fn, q_x_fn=perturbed_chart.q_x_fn,
        p_z_fn=perturbed_chart.p_z_fn, q_z_fn=perturbed_chart.q_z_fn)
    with pytest.raises(CheckFailure):
        analysis.gronwall_check(doctored, base, 0.003, 0.004)


# --- accumulation ------------------------------------------------------------

@pytest.fixture(scope="module")
def short_run(perturbed_chart):
    r, w = analysis.default_experiment_scale(0.05)
    return analysis.accumulation_run(perturbed_chart, r, w, 6)


def test_accumulation_returns_differ_from_start(short_run):
    assert all(abs(wn - short_run.w) > short_run.noise_floor
               for wn in short_run.w_seq)


def test_accumulation_monotone_after_burnin(short_run):
    assert short_run.monotone_after_burnin


def test_accumulation_two_sided_bounds(short_run):
    run = short_run
    scales = run.r / 2.0 ** np.arange(1, len(run.w_seq) + 1)
    assert np.all(run.gaps <= run.bound_values)
    assert np.all(run.vu_gaps >= scales ** 2 / run.c_est)


def test_accumulation_loop_length_budget(short_run):
    assert np.all(short_run.loop_lengths < short_run.length_budget)


def test_accumulation_gronwall_transfer(short_run, perturbed_chart):
    # |w_n - w| <= e^{2 M * return length} |v_n - u_n| with return < 2 nu r
    run = short_run
    factor = np.exp(2 * perturbed_chart.M * 2 * run.nu * run.r) * (1 + 1e-6)
    assert np.all(run.gaps <= factor * run.vu_gaps)


def test_accumulation_decay_slope(short_run):
    assert short_run.slope == pytest.approx(-2.0, abs=0.1)


def test_accumulation_junctions_consistent(perturbed_chart):
    # v_n is the displaced height of the orbit at scale r/2^n lifted from u_n
    r, w = analysis.default_experiment_scale(0.05)
    run = analysis.accumulation_run(perturbed_chart, r, w, 3)
    for n in (1, 2, 3):
        scale = r / 2 ** n
        orbit = fol.compute_orbit(scale)
        relift = lifting.lift_path(perturbed_chart, orbit.path(), run.u_seq[n - 1],
                                   rtol=1e-12, atol=1e-16)
        assert relift.z_end == pytest.approx(run.v_seq[n - 1], abs=1e-12)


def test_accumulation_rejects_bad_scales(perturbed_chart):
    with pytest.raises(ValueError) as err:
        analysis.accumulation_run(perturbed_chart, 0.2, 0.001, 4)
    assert "0 < r < delta" in str(err.value)
    with pytest.raises(ValueError) as err:
        analysis.accumulation_run(perturbed_chart, 1e-3, 0.2, 4)
    assert "|w| < delta" in str(err.value)
    with pytest.raises(ValueError):
        analysis.accumulation_run(perturbed_chart, 1e-3, 0.001, 25)


def test_default_scale_satisfies_hypotheses(nu):
    r, w = analysis.default_experiment_scale(0.05)
    assert 0 < r < 0.05
    assert abs(w) < 0.05
    assert r + abs(w) < 0.05
    assert r == pytest.approx(0.05 / (4 * nu))
