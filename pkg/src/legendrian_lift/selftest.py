"""Acceptance suite: every release-gating property at its pinned tolerance.

Each criterion returns a CheckResult; the CLI selftest subcommand and the
pytest acceptance module both consume run_all(). All numbers checked here
are either analytically forced (holonomy factors, residue sums), produced
by an independent oracle (shoelace areas, residue theorem vs quadrature),
or two-sided bounds derived from the displacement scan itself.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import analysis, expr as ex, foliation as fol, geometry, lifting

__all__ = ["CheckResult", "run_all", "CRITERIA"]

_SEED = 20250

DELTA_SMALL = 0.05
DELTA_WIDE = 0.2
PERTURBED_P = "-y/2 + z^2/10"
PERTURBED_Q = "x/2 + x*z/20"


@dataclass
class CheckResult:
    criterion: str
    passed: bool
    detail: str
    elapsed: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.criterion}  [{self.elapsed:.2f}s]  {self.detail}"


@lru_cache(maxsize=None)
def _contact_chart(delta):
    nu = fol.length_bound()
    return lifting.make_chart(ex.parse("-y/2"), ex.parse("x/2"),
                              lifting.chart_domain(delta, nu))


@lru_cache(maxsize=None)
def _perturbed_chart(delta):
    nu = fol.length_bound()
    return lifting.make_chart(ex.parse(PERTURBED_P), ex.parse(PERTURBED_Q),
                              lifting.chart_domain(delta, nu))


@lru_cache(maxsize=1)
def _orbit_area_oracle() -> float:
    """Enclosed area of the unit orbit by Richardson-extrapolated shoelace
    sums on two polygonizations (independent of all quadrature machinery)."""
    profile = fol.compute_orbit(1.0)

    def shoelace(n):
        th = np.linspace(0.0, 2.0 * np.pi, n + 1)
        rho = profile.rho(th)
        x, y = rho * np.cos(th), rho * np.sin(th)
        return 0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])

    coarse, fine = shoelace(1 << 14), shoelace(1 << 15)
    return float((4.0 * fine - coarse) / 3.0)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------

def criterion_1_holonomy_involution():
    loop = fol.center_holonomy_loop()
    worst = 0.0
    start = time.perf_counter()
    for x0 in (1e-2, 1e-3 * (1 + 1j)):
        once = fol.holonomy_map(loop, x0)
        worst = max(worst, abs(once + x0) / abs(x0))
        twice = fol.holonomy_map(loop, once)
        worst = max(worst, abs(twice - x0) / abs(x0))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 1.0
    return ok, f"max relative involution error {worst:.2e}, runtime {elapsed:.3f}s"


def criterion_2_transport_constant():
    f_end = fol.transport_exponent_end()
    direct = abs(f_end + np.log(2.0))
    oracle = 0.5 * fol.residue_oracle(fol.halving_loop())
    cross = abs(oracle + np.log(2.0))
    ok = direct <= 1e-9 and cross <= 1e-9
    return ok, f"|f(2pi)+log2| = {direct:.2e}, residue-route {cross:.2e}"


def criterion_3_residue_identity():
    loop = fol.center_holonomy_loop()
    target = -2j * np.pi
    theorem = fol.residue_oracle(loop)     # internally cross-checks quadrature
    quad = geometry.contour_integral(fol.holonomy_form().as_form(), loop)
    err_thm = _rel(theorem, target)
    err_quad = _rel(quad, target)
    ok = err_thm <= 1e-9 and err_quad <= 1e-9
    return ok, f"residue route {err_thm:.2e}, quadrature route {err_quad:.2e} (rel)"


def criterion_4_center_geometry():
    orbit = fol.compute_orbit(1.0)
    closure = orbit.closure_residual / orbit.rho(0.0)
    half = fol.compute_orbit(0.5)
    th = np.linspace(0.0, 2.0 * np.pi, 1001)
    homothety = max(
        float(np.abs(half.point(t) - 0.5 * orbit.point(t)).max()) for t in th)
    gamma_err = 0.0
    for r in (1e-2, 1e-3):
        curve = fol.connecting_curve(r)
        end = curve(curve.b)
        gamma_err = max(gamma_err,
                        float(np.abs(end - np.array([r / 2, 0])).max()) / r)
    ok = closure <= 1e-8 and homothety <= 1e-9 and gamma_err <= 1e-9
    return ok, (f"closure {closure:.2e}, homothety {homothety:.2e}, "
                f"connector endpoint {gamma_err:.2e} (per r)")


def criterion_5_quadratic_law():
    chart = _contact_chart(DELTA_WIDE)
    scan = analysis.displacement_scan(chart, [2.0 ** -k for k in range(4, 11)], 0.0)
    area = _orbit_area_oracle()
    area_err = max(_rel(rec.delta, rec.r ** 2 * area) for rec in scan.records)
    slope_err = abs(scan.slope - 2.0)

    chart_p = _perturbed_chart(DELTA_SMALL)
    scan_p = analysis.displacement_scan(chart_p, [2.0 ** -k for k in range(5, 12)],
                                        0.1 * DELTA_SMALL)
    slope_p_err = abs(scan_p.slope - 2.0)
    band_ok = all(rec.r ** 2 / scan_p.c_est <= rec.abs_delta <= scan_p.c_est * rec.r ** 2
                  for rec in scan_p.records)
    ok = slope_err <= 0.01 and area_err <= 1e-8 and slope_p_err <= 0.05 and band_ok
    return ok, (f"contact slope 2{scan.slope - 2.0:+.2e}, area law {area_err:.2e} rel; "
                f"perturbed slope 2{scan_p.slope - 2.0:+.2e}, "
                f"c_est {scan_p.c_est:.3g}, band {'ok' if band_ok else 'VIOLATED'}")


def criterion_6_stokes():
    worst = 0.0
    for chart, delta in ((_contact_chart(DELTA_SMALL), DELTA_SMALL),
                         (_perturbed_chart(DELTA_SMALL), DELTA_SMALL)):
        r0 = delta / (4.0 * fol.length_bound())
        for r in (0.5 * r0, r0, 2.0 * r0):
            for w in (0.0, 0.1 * delta, 0.1j * delta):
                rec = analysis.stokes_cross_check(chart, r, w)
                worst = max(worst, rec.stokes_gap)
    ok = worst <= 1e-5
    return ok, f"max |line-surface|/|line| over 3x3 grid x 2 charts: {worst:.2e}"


def criterion_7_accumulation():
    details = []
    ok = True
    for chart in (_contact_chart(DELTA_SMALL), _perturbed_chart(DELTA_SMALL)):
        r, w = analysis.default_experiment_scale(DELTA_SMALL)
        run = analysis.accumulation_run(chart, r, w, 10)
        above_floor = run.truncated_at is None and np.all(run.gaps > run.noise_floor)
        bounded = bool(np.all(run.gaps <= run.bound_values))
        lower = bool(np.all(
            run.vu_gaps >= (run.r / 2.0 ** np.arange(1, len(run.vu_gaps) + 1)) ** 2
            / run.c_est))
        slope_ok = abs(run.slope + 2.0) <= 0.1
        budget_ok = bool(np.all(run.loop_lengths < run.length_budget))
        ok = ok and above_floor and bounded and lower and slope_ok and budget_ok
        details.append(f"slope {run.slope:+.4f}, bound "
                       f"{'ok' if bounded and lower else 'VIOLATED'}, "
                       f"budget {'ok' if budget_ok else 'VIOLATED'}")
    return ok, "; ".join(details)


def criterion_8_lifting_contracts():
    chart = _perturbed_chart(DELTA_SMALL)
    r, w = analysis.default_experiment_scale(DELTA_SMALL)
    curve = fol.connecting_curve(r)
    fwd = lifting.lift_path(chart, curve, w)
    back = lifting.lift_path(chart, curve.reverse(), fwd.z_end)
    rev_err = abs(back.z_end - w)

    base = fol.compute_orbit(r).path()
    ref = lifting.lift_path(chart, base, w, rtol=1e-11, atol=1e-13)
    halved = lifting.lift_path(chart, base, w, rtol=5e-12, atol=5e-14)
    tenth = lifting.lift_path(chart, base, w, rtol=1e-12, atol=1e-14)
    stab = max(abs(ref.z_end - halved.z_end), abs(ref.z_end - tenth.z_end))
    stab_bound = 1e-9 * (1.0 + abs(ref.z_end))

    grid = analysis.base_length_grid(base)
    rng = np.random.default_rng(_SEED)
    worst_ratio = 0.0
    for _ in range(100):
        u, v = rng.uniform(-DELTA_SMALL / 3, DELTA_SMALL / 3, 4).view(complex)
        rep = analysis.gronwall_check(chart, base, complex(u), complex(v), grid=grid)
        worst_ratio = max(worst_ratio, rep.max_ratio)

    dev = max(lifting.lift_deviation_check(chart, lp).max_ratio
              for lp in (fwd, back, ref, halved, tenth))
    ok = (rev_err <= 1e-9 and stab <= stab_bound and worst_ratio <= 1.0 and dev <= 1.0)
    return ok, (f"reversibility {rev_err:.2e}, tolerance stability {stab:.2e}, "
                f"gronwall worst ratio {worst_ratio:.6f}, deviation ratio {dev:.3f}")


_FD_EXPRS = (
    "-y/2", "x/2", PERTURBED_P, PERTURBED_Q,
    "(x^2+1)/(y-3*i)", "x*y*z - z^3/(1+x^2)", "(x-2*i*y)^3/(z^2+4)",
    "1/(x*y - z + 5)",
)


def criterion_9_expression_calculus():
    rng = np.random.default_rng(_SEED)
    h = 1e-5
    worst = 0.0
    for text in _FD_EXPRS:
        e = ex.parse(text)
        partials = {v: ex.derivative(e, v) for v in ("x", "y", "z")}
        done = 0
        while done < 100:
            pt = rng.uniform(-1.5, 1.5, 6).view(complex)
            try:
                for vi, vname in enumerate(("x", "y", "z")):
                    step = np.zeros(3, dtype=complex)
                    step[vi] = h
                    fd = (ex.evaluate(e, pt + step) - ex.evaluate(e, pt - step)) / (2 * h)
                    sym = ex.evaluate(partials[vname], pt)
                    worst = max(worst, abs(sym - fd) / (1.0 + abs(sym)))
            except ex.DivisionByZero:
                continue
            done += 1

    rng = np.random.default_rng(_SEED + 1)
    roundtrip_exact = True
    for text in _FD_EXPRS:
        e = ex.parse(text)
        again = ex.parse(ex.render(e))
        for _ in range(100):
            pt = rng.uniform(-1.5, 1.5, 6).view(complex)
            try:
                a = ex.evaluate(e, pt)
            except ex.DivisionByZero:
                continue
            if ex.evaluate(again, pt) != a:
                roundtrip_exact = False
    ok = worst <= 1e-6 and roundtrip_exact
    return ok, (f"max FD deviation {worst:.2e}, round-trip "
                f"{'exact' if roundtrip_exact else 'BROKEN'}")


CRITERIA = (
    ("1-holonomy-involution", criterion_1_holonomy_involution),
    ("2-transport-constant", criterion_2_transport_constant),
    ("3-residue-identity", criterion_3_residue_identity),
    ("4-center-geometry", criterion_4_center_geometry),
    ("5-quadratic-displacement-law", criterion_5_quadratic_law),
    ("6-stokes-cross-check", criterion_6_stokes),
    ("7-accumulation", criterion_7_accumulation),
    ("8-lifting-contracts", criterion_8_lifting_contracts),
    ("9-expression-calculus", criterion_9_expression_calculus),
)


def run_one(name) -> CheckResult:
    fn = dict(CRITERIA)[name]
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as err:                       # a crash is a failure, not an abort
        ok, detail = False, f"raised {type(err).__name__}: {err}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - start)


def run_all(progress=None) -> list:
    results = []
    for name, _fn in CRITERIA:
        res = run_one(name)
        results.append(res)
        if progress is not None:
            progress(res.line())
    return results
