"""Quantitative experiments on a distribution chart.

Everything here measures one number in different ways: the height gap
picked up by lifting a closed center orbit. The line route integrates the
lifting ODE; the surface route pushes the same gap through the cone spanned
by the orbit (a Stokes identity); the scan fits the quadratic law |gap| ~
r^2; the accumulation run replays the halving transport to produce a
sequence of leaf returns converging to, but never equal to, the start
height.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckFailure, QuadratureError
from .foliation import (compute_orbit, connecting_curve,
                        connecting_curve_unit_length, length_bound,
                        orbit_unit_length)
from .geometry import ParamPath, kronrod_panel
from .lifting import DistributionChart, lift_path

__all__ = [
    "DisplacementRecord",
    "ScanResult",
    "GronwallReport",
    "AccumulationRun",
    "displacement",
    "displacement_scan",
    "stokes_cross_check",
    "gronwall_check",
    "accumulation_run",
    "default_experiment_scale",
]

_EPS = np.finfo(float).eps


def default_experiment_scale(delta: float = 0.05):
    """Default (r, w) satisfying every smallness hypothesis with margin:
    r = delta / (4 nu), w = 0.1 delta."""
    nu = length_bound()
    return delta / (4.0 * nu), 0.1 * delta


def _auto_atol(r, atol):
    # error budget proportional to the r^2 signal; floor well above roundoff
    return min(atol, max(1e-17, 1e-11 * r * r))


@dataclass
class DisplacementRecord:
    """Height gap after lifting the closed orbit at radius r from height w."""
    r: float
    w: complex
    delta: complex
    abs_delta: float
    line_value: complex
    surface_value: complex | None = None
    stokes_gap: float | None = None
    epsilon: float = 0.0
    M: float = 0.0


def _displacement_lift(chart, r, w, rtol, atol):
    orbit = compute_orbit(r)
    lifted = lift_path(chart, orbit.path(), w, rtol=rtol, atol=_auto_atol(r, atol))
    delta = lifted.height_gain()
    rec = DisplacementRecord(r=float(r), w=complex(w), delta=delta,
                             abs_delta=abs(delta), line_value=delta,
                             epsilon=chart.epsilon, M=chart.M)
    return rec, orbit, lifted


def displacement(chart: DistributionChart, r: float, w: complex,
                 rtol: float = 1e-11, atol: float = 1e-13) -> DisplacementRecord:
    """Lift the orbit through (r, 0) from height w; report z(end) - w."""
    rec, _, _ = _displacement_lift(chart, r, w, rtol, atol)
    return rec


@dataclass
class ScanResult:
    """Displacement records over a radius list plus the fitted power law."""
    records: list
    slope: float
    c_est: float
    eps_m: float
    warnings: list = field(default_factory=list)


def _worker_count():
    try:
        return max(1, int(os.environ.get("LEGENDRIAN_LIFT_THREADS", "1")))
    except ValueError:
        return 1


def displacement_scan(chart: DistributionChart, r_list, w: complex,
                      rtol: float = 1e-11, atol: float = 1e-13) -> ScanResult:
    """Fit log|gap| against log r and estimate the two-sided constant.

    c_est = 1.1 * max over the scan of max(|gap|/r^2, r^2/|gap|); the 10%
    pad gives the acceptance bounds a concrete, slightly conservative
    constant. Records keep the order of r_list. Grid points are lifted in
    parallel when LEGENDRIAN_LIFT_THREADS > 1.
    """
    r_list = list(r_list)
    if not r_list:
        raise ValueError("empty r_list")

    def one(r):
        return displacement(chart, r, w, rtol, atol)

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, r_list))
    else:
        records = [one(r) for r in r_list]

    rs = np.array([rec.r for rec in records])
    gaps = np.array([rec.abs_delta for rec in records])
    if np.any(gaps == 0):
        raise CheckFailure("zero displacement in scan: quadratic law violated")
    slope = float(np.polyfit(np.log(rs), np.log(gaps), 1)[0]) if len(rs) > 1 else float("nan")
    c_est = 1.1 * max(max(rec.abs_delta / rec.r ** 2, rec.r ** 2 / rec.abs_delta)
                      for rec in records)
    result = ScanResult(records=records, slope=slope, c_est=c_est,
                        eps_m=chart.epsilon * chart.M)
    if len(rs) > 1 and abs(slope - 2.0) > 0.1:
        result.warnings.append(
            f"quadratic law eroding: fitted exponent {slope:.4f} is far from 2 "
            f"(eps*M = {result.eps_m:.3g} may be too large for these scales)")
    return result


# ---------------------------------------------------------------------------
# Stokes cross-check
# ---------------------------------------------------------------------------

def _gl_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w     # on [0, 1]


def _cone_integral(chart, orbit, lifted, r, w, n_theta_panels):
    """Tensor quadrature of the three surface terms over the cone spanned by
    the lifted orbit from the axis point (0, 0, w)."""
    t_nodes, t_wts = _gl_nodes(24)
    th_nodes, th_wts = _gl_nodes(16)

    total = 0j
    edges = np.linspace(0.0, 2.0 * np.pi, n_theta_panels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        th = a + (b - a) * th_nodes
        wth = (b - a) * th_wts
        rho = orbit.rho(th)
        drho = orbit.drho(th)
        cos, sin = np.cos(th), np.sin(th)
        x1 = r * rho * cos                    # orbit coordinates at t = 1
        y1 = r * rho * sin
        dx1 = r * (drho * cos - rho * sin)
        dy1 = r * (drho * sin + rho * cos)
        zeta_minus_w = lifted.offset(th)      # single-piece lift: exact offset
        zeta = w + zeta_minus_w
        dzeta = chart.p_fn(x1, y1, zeta) * dx1 + chart.q_fn(x1, y1, zeta) * dy1

        T = t_nodes[:, None]
        X = T * x1[None, :]
        Y = T * y1[None, :]
        Z = w + T * zeta_minus_w[None, :]
        curl = chart.q_x_fn(X, Y, Z) - chart.p_y_fn(X, Y, Z)
        area_xy = (r * rho) ** 2
        f_xy = curl * area_xy[None, :] * T
        a_dzdx = zeta_minus_w * dx1 - dzeta * x1
        f_zx = chart.p_z_fn(X, Y, Z) * a_dzdx[None, :] * T
        b_dzdy = zeta_minus_w * dy1 - dzeta * y1
        f_zy = chart.q_z_fn(X, Y, Z) * b_dzdy[None, :] * T
        panel = (f_xy + f_zx + f_zy) * t_wts[:, None] * wth[None, :]
        total += panel.sum()
    return total


def _triangle_integral(chart, r, w, gap, n_panels):
    """P_z term over the vertical triangle (0,0,w), (r,0,w), (r,0,w+gap),
    parametrized on 0 <= t <= s <= 1."""
    s_nodes, s_wts = _gl_nodes(16)
    t_nodes, t_wts = _gl_nodes(24)

    total = 0j
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        s = a + (b - a) * s_nodes
        ws = (b - a) * s_wts
        T = t_nodes[:, None] * s[None, :]           # t in [0, s]
        WT = t_wts[:, None] * s[None, :]
        X = np.broadcast_to(s[None, :] * r, T.shape)
        Z = w + T * gap
        vals = chart.p_z_fn(X, np.zeros_like(T), Z) * gap * r
        total += (vals * WT * ws[None, :]).sum()
    return total


def stokes_cross_check(chart: DistributionChart, r: float, w: complex,
                       rtol: float = 1e-11, atol: float = 1e-13,
                       quad_tol: float = 1e-9) -> DisplacementRecord:
    """Displacement via the lifting ODE and, independently, via surface
    quadrature of (Q_x - P_y) dxdy + P_z dzdx + Q_z dzdy over the cone on
    the lifted orbit plus the closing triangle.

    Panel counts double until the surface value stabilizes to quad_tol.
    """
    rec, orbit, lifted = _displacement_lift(chart, r, w, rtol, atol)

    def surface(n_panels):
        return (_cone_integral(chart, orbit, lifted, r, complex(w), n_panels)
                + _triangle_integral(chart, r, complex(w), lifted.height_gain(),
                                     max(2, n_panels // 4)))

    prev = surface(8)
    n = 16
    while True:
        cur = surface(n)
        if abs(cur - prev) <= quad_tol * (1.0 + abs(cur)):
            break
        if n >= 512:
            raise QuadratureError("cone quadrature did not stabilize")
        prev, n = cur, n * 2

    rec.surface_value = cur
    rec.stokes_gap = abs(rec.line_value - cur) / abs(rec.line_value)
    return rec


# ---------------------------------------------------------------------------
# Gronwall envelope
# ---------------------------------------------------------------------------

@dataclass
class GronwallReport:
    """sup_t |z_v - z_u| against |v - u| e^{2 M length(t)} (1 + 1e-6)."""
    initial_gap: float
    sup_gap: float
    max_ratio: float
    ok: bool


def base_length_grid(base: ParamPath, n: int = 128):
    """Cumulative arc length of the base path on a uniform grid, reusable
    across many gronwall_check calls on the same path."""
    ss = np.linspace(base.a, base.b, n + 1)
    ells = np.empty(n + 1)
    ells[0] = 0.0
    for k in range(n):
        ells[k + 1] = ells[k] + kronrod_panel(
            lambda s: np.linalg.norm(base.velocity(s)), ss[k], ss[k + 1]).real
    return ss, ells


def gronwall_check(chart: DistributionChart, base: ParamPath, u: complex,
                   v: complex, rtol: float = 1e-10, atol: float = 1e-14,
                   grid=None) -> GronwallReport:
    """Lift the base path from u and from v and verify the two tracks never
    separate faster than the exponential envelope allows."""
    lift_u = lift_path(chart, base, u, rtol=rtol, atol=atol)
    lift_v = lift_path(chart, base, v, rtol=rtol, atol=atol)
    ss, ells = grid if grid is not None else base_length_grid(base)
    gaps = np.abs(lift_v.z(ss) - lift_u.z(ss))
    envelope = abs(v - u) * np.exp(2.0 * chart.M * ells) * (1.0 + 1e-6)
    if abs(v - u) == 0.0:
        ok = bool(np.all(gaps <= atol * 100))
        report = GronwallReport(0.0, float(gaps.max()), 0.0, ok)
    else:
        ratios = gaps / envelope
        report = GronwallReport(abs(v - u), float(gaps.max()),
                                float(ratios.max()), bool(ratios.max() <= 1.0))
    if not report.ok:
        raise CheckFailure(
            f"lift separation {report.sup_gap:.3e} escapes the exponential "
            f"envelope (ratio {report.max_ratio:.6f})")
    return report


# ---------------------------------------------------------------------------
# Accumulation experiment
# ---------------------------------------------------------------------------

@dataclass
class AccumulationRun:
    """Leaf returns w_n over the loops (descend n halvings, run the small
    orbit, come back), all lifted from (r, 0, w)."""
    r: float
    w: complex
    N: int
    w_seq: list
    u_seq: list
    v_seq: list
    gaps: np.ndarray              # |w_n - w|
    vu_gaps: np.ndarray           # |v_n - u_n|
    loop_lengths: np.ndarray
    length_budget: float          # 4 nu r
    bound_values: np.ndarray      # c_est e^{4 M nu r} (r/2^n)^2
    slope: float
    fit_ns: list
    c_est: float
    M: float
    nu: float
    noise_floor: float
    truncated_at: int | None = None

    @property
    def monotone_after_burnin(self):
        g = self.gaps
        return bool(np.all(np.diff(g[1:]) < 0)) if len(g) > 2 else True


def accumulation_run(chart: DistributionChart, r: float, w: complex, N: int,
                     c_est: float | None = None, rtol: float = 1e-11,
                     atol: float = 1e-13) -> AccumulationRun:
    """Lift the nested loops for n = 1..N and collect the return heights.

    Each loop concatenates the halving curves down to scale r/2^n, the
    center orbit at that scale, and the reversed halving curves. The lift
    of loop n yields u_n (height after the descent), v_n (after the small
    orbit) and w_n (the return height).
    """
    if N > 20:
        raise ValueError("N must be at most 20")
    if N < 1:
        raise ValueError("N must be at least 1")
    nu = length_bound()
    delta_eff = min(chart.domain.radii) / (5.0 * nu)
    w = complex(w)
    for name, ok in (("0 < r < delta", 0.0 < r < delta_eff),
                     ("|w| < delta", abs(w) < delta_eff),
                     ("r + |w| < delta", r + abs(w) < delta_eff)):
        if not ok:
            raise ValueError(f"smallness hypothesis violated: {name} "
                             f"(delta = {delta_eff:g} from the chart domain)")

    if c_est is None:
        scan = displacement_scan(chart, [r / 2 ** n for n in range(1, min(N, 6) + 1)],
                                 w, rtol, atol)
        c_est = scan.c_est

    unit_orbit_len = orbit_unit_length()
    unit_curve_len = connecting_curve_unit_length()
    descents = [connecting_curve(r / 2 ** (j - 1)) for j in range(1, N + 1)]
    descent_lengths = np.array([r / 2 ** (j - 1) * unit_curve_len for j in range(1, N + 1)])

    w_seq, u_seq, v_seq, loop_lengths = [], [], [], []
    gain_list, vu_list = [], []
    noise_floor = 1e3 * _EPS * abs(w)
    truncated_at = None
    for n in range(1, N + 1):
        loop = descents[0]
        for j in range(1, n):
            loop = loop.concat(descents[j])
        scale = r / 2 ** n
        loop = loop.concat(compute_orbit(scale).path())
        for j in range(n - 1, -1, -1):
            loop = loop.concat(descents[j].reverse())

        lifted = lift_path(chart, loop, w, rtol=rtol, atol=_auto_atol(scale, atol))
        junctions = lifted.junction_heights()
        u_seq.append(junctions[n])
        v_seq.append(junctions[n + 1])
        w_seq.append(lifted.z_end)
        # per-piece offsets avoid cancellation against the base height w
        gain_list.append(lifted.height_gain())
        vu_list.append(lifted.segment_gains()[n])
        loop_lengths.append(2.0 * descent_lengths[:n].sum() + scale * unit_orbit_len)
        if abs(gain_list[-1]) < noise_floor:
            truncated_at = n
            break

    n_count = len(w_seq)
    gaps = np.abs(np.array(gain_list))
    vu_gaps = np.abs(np.array(vu_list))
    ns = np.arange(1, n_count + 1)
    bound_values = c_est * np.exp(4.0 * chart.M * nu * r) * (r / 2.0 ** ns) ** 2

    usable = [k for k in range(n_count)
              if 2 <= ns[k] <= 8 and gaps[k] > noise_floor]
    if len(usable) >= 2:
        slope = float(np.polyfit(ns[usable], np.log2(gaps[usable]), 1)[0])
    else:
        slope = float("nan")

    return AccumulationRun(
        r=float(r), w=w, N=N, w_seq=w_seq, u_seq=u_seq, v_seq=v_seq,
        gaps=gaps, vu_gaps=vu_gaps, loop_lengths=np.array(loop_lengths),
        length_budget=4.0 * nu * r, bound_values=bound_values, slope=slope,
        fit_ns=[int(ns[k]) for k in usable], c_est=float(c_est),
        M=chart.M, nu=nu, noise_floor=noise_floor, truncated_at=truncated_at)


