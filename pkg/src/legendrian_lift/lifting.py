"""Distribution charts dz = P dx + Q dy and path lifting.

A chart packages two pole-free rational coefficients P, Q on a polydisc,
validated against the normal form P(0) = Q(0) = 0, Q_x(0) - P_y(0) = 1.
Lifting a planar path solves the scalar complex ODE

    z'(s) = P(x, y, z) x'(s) + Q(x, y, z) y'(s)

piece by piece with embedded Runge-Kutta error control; the track is kept
as a dense interpolable table, and any approach to the domain boundary is
localized by bisection and reported as DomainExit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import CheckFailure, DomainExit, NumericalError
from .geometry import ParamPath, Polydisc, cumulative_length
from .ode import integrate

__all__ = [
    "DistributionChart",
    "NormalFormError",
    "make_chart",
    "chart_domain",
    "bounds",
    "LiftedPath",
    "lift_path",
    "legendrian_lift_field",
    "integrability_defect",
    "lift_deviation_check",
]

_GRID_ANGLES = 17          # prime, avoids aliasing against symmetric charts
_BOUND_INFLATION = 1.10
_EXIT_MARGIN = 1e-6


class NormalFormError(NumericalError):
    """Chart coefficients violate the normal form; message names the failed
    condition."""


@dataclass(frozen=True)
class DistributionChart:
    """Validated chart with cached partials, compiled evaluators and sup
    bounds (epsilon for |P|, |Q|, |1 - Q_x + P_y|; M for |P_z|, |Q_z|)."""
    P: ex.RationalExpr
    Q: ex.RationalExpr
    domain: Polydisc
    P_y: ex.RationalExpr
    Q_x: ex.RationalExpr
    P_z: ex.RationalExpr
    Q_z: ex.RationalExpr
    epsilon: float
    M: float
    p_fn: object
    q_fn: object
    p_y_fn: object
    q_x_fn: object
    p_z_fn: object
    q_z_fn: object

    def describe(self):
        return {"P": ex.render(self.P), "Q": ex.render(self.Q),
                "radii": list(self.domain.radii),
                "epsilon": self.epsilon, "M": self.M}


def chart_domain(delta: float, nu: float, clamp: float | None = None) -> Polydisc:
    """Polydisc of radius 5*nu*delta per coordinate (optionally clamped)."""
    if delta <= 0 or nu <= 0:
        raise ValueError("delta and nu must be positive")
    r = 5.0 * nu * delta
    if clamp is not None:
        r = min(r, float(clamp))
    return Polydisc.centered(r)


def _boundary_grid(domain: Polydisc, n_angles=_GRID_ANGLES):
    """Distinguished-boundary grid |coord_i| = radius_i (moduli of a
    holomorphic function on the closed polydisc peak there)."""
    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    rim = np.exp(1j * angles)
    gx, gy, gz = np.meshgrid(domain.radii[0] * rim, domain.radii[1] * rim,
                             domain.radii[2] * rim, indexing="ij")
    cx, cy, cz = domain.center
    return gx + cx, gy + cy, gz + cz


def _grid_sup(fn, domain) -> float:
    gx, gy, gz = _boundary_grid(domain)
    with np.errstate(divide="raise", invalid="raise"):
        try:
            vals = np.abs(fn(gx, gy, gz)) + np.zeros(gx.shape)
        except (FloatingPointError, ZeroDivisionError):
            raise NumericalError("pole inside (or on) the chart domain") from None
    if not np.all(np.isfinite(vals)):
        raise NumericalError("pole inside (or on) the chart domain")
    return float(vals.max())


def bounds(chart_or_exprs, domain: Polydisc) -> tuple[float, float]:
    """Sup estimates (epsilon, M) over the domain closure, inflated by 10%.

    epsilon bounds |P|, |Q| and the normal-form defect |1 - Q_x + P_y|;
    M bounds |P_z| and |Q_z|. Estimated on a 17^3 distinguished-boundary
    grid (plus interior shells for pole detection in make_chart).
    """
    if isinstance(chart_or_exprs, DistributionChart):
        c = chart_or_exprs
        fns = (c.p_fn, c.q_fn, c.p_y_fn, c.q_x_fn, c.p_z_fn, c.q_z_fn)
    else:
        P, Q = chart_or_exprs
        fns = tuple(ex.compile_fn(e) for e in (
            P, Q, ex.derivative(P, "y"), ex.derivative(Q, "x"),
            ex.derivative(P, "z"), ex.derivative(Q, "z")))
    p_fn, q_fn, p_y_fn, q_x_fn, p_z_fn, q_z_fn = fns
    sup_p = _grid_sup(p_fn, domain)
    sup_q = _grid_sup(q_fn, domain)
    defect_fn = lambda x, y, z: 1.0 - q_x_fn(x, y, z) + p_y_fn(x, y, z)
    sup_defect = _grid_sup(defect_fn, domain)
    eps = _BOUND_INFLATION * max(sup_p, sup_q, sup_defect)
    m = _BOUND_INFLATION * max(_grid_sup(p_z_fn, domain), _grid_sup(q_z_fn, domain))
    return eps, m


def make_chart(P: ex.RationalExpr, Q: ex.RationalExpr, domain: Polydisc) -> DistributionChart:
    """Validate the normal form and build a chart with cached partials.

    Raises NormalFormError naming the violated condition, or NumericalError
    if a pole is detected on the domain closure grid.
    """
    origin = tuple(domain.center)
    try:
        p0 = ex.evaluate(P, origin)
        q0 = ex.evaluate(Q, origin)
        P_y = ex.derivative(P, "y")
        Q_x = ex.derivative(Q, "x")
        twist = ex.evaluate(Q_x, origin) - ex.evaluate(P_y, origin)
    except ex.DivisionByZero as err:
        raise NumericalError(f"pole at the chart center: {err}") from None
    if abs(p0) > 1e-12:
        raise NormalFormError(f"P(center) = {p0} is not 0")
    if abs(q0) > 1e-12:
        raise NormalFormError(f"Q(center) = {q0} is not 0")
    if abs(twist - 1.0) > 1e-12:
        raise NormalFormError(f"Q_x(center) - P_y(center) = {twist} is not 1")

    P_z = ex.derivative(P, "z")
    Q_z = ex.derivative(Q, "z")
    fns = {name: ex.compile_fn(e) for name, e in
           (("p", P), ("q", Q), ("p_y", P_y), ("q_x", Q_x), ("p_z", P_z), ("q_z", Q_z))}

    # pole scan on interior shells; the boundary grid is covered by bounds()
    for frac in (0.25, 0.5, 0.75):
        shell = Polydisc(domain.center, tuple(frac * r for r in domain.radii))
        _grid_sup(fns["p"], shell)
        _grid_sup(fns["q"], shell)

    chart = DistributionChart(
        P=P, Q=Q, domain=domain, P_y=P_y, Q_x=Q_x, P_z=P_z, Q_z=Q_z,
        epsilon=0.0, M=0.0,
        p_fn=fns["p"], q_fn=fns["q"], p_y_fn=fns["p_y"], q_x_fn=fns["q_x"],
        p_z_fn=fns["p_z"], q_z_fn=fns["q_z"])
    eps, m = bounds(chart, domain)
    object.__setattr__(chart, "epsilon", eps)
    object.__setattr__(chart, "M", m)
    return chart


# ---------------------------------------------------------------------------
# Path lifting
# ---------------------------------------------------------------------------

class LiftedPath:
    """A lifted track z(s) over a planar base path.

    Each smooth base piece is integrated in offset form d = z - z(piece
    start): step control sees only the height picked up within the piece,
    so tiny displacements are never drowned by a large base height, and
    z-independent charts give bit-identical offsets for every start height.
    """

    def __init__(self, base, chart, segments, z0):
        self.base = base
        self.chart = chart
        self._segments = segments      # list of (s_lo, s_hi, base_z, OdeSolution)
        self.z_start = complex(z0)
        self.z_end = complex(segments[-1][2] + segments[-1][3].y_end)
        self.max_abs_z = max(float(np.abs(seg[2] + seg[3].ys).max())
                             for seg in segments)
        self.n_steps = sum(seg[3].n_steps for seg in segments)
        self.n_rejected = sum(seg[3].n_rejected for seg in segments)

    def z(self, s):
        """Interpolated z at base parameter s (scalar or array)."""
        s_arr = np.asarray(s, dtype=float)
        scalar = s_arr.ndim == 0
        s_flat = np.atleast_1d(s_arr)
        out = np.empty(s_flat.shape, dtype=complex)
        lows = np.array([seg[0] for seg in self._segments])
        idx = np.clip(np.searchsorted(lows, s_flat, side="right") - 1,
                      0, len(self._segments) - 1)
        for k, (lo, _hi, base_z, sol) in enumerate(self._segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = base_z + sol(np.clip(s_flat[mask] - lo + sol.ts[0],
                                                 sol.ts[0], sol.ts[-1]))
        return complex(out[0]) if scalar else out

    def height_gain(self) -> complex:
        """z(end) - z(start) as the exact sum of per-piece offsets (no
        cancellation against the base height)."""
        return complex(sum(sol.y_end for _lo, _hi, _bz, sol in self._segments))

    def offset(self, s):
        """z(s) - z(start of the containing piece), at interpolant precision;
        for a single-piece lift this is the full-precision height offset."""
        s_arr = np.asarray(s, dtype=float)
        scalar = s_arr.ndim == 0
        s_flat = np.atleast_1d(s_arr)
        out = np.empty(s_flat.shape, dtype=complex)
        lows = np.array([seg[0] for seg in self._segments])
        idx = np.clip(np.searchsorted(lows, s_flat, side="right") - 1,
                      0, len(self._segments) - 1)
        for k, (lo, _hi, _bz, sol) in enumerate(self._segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = sol(np.clip(s_flat[mask] - lo + sol.ts[0],
                                        sol.ts[0], sol.ts[-1]))
        return complex(out[0]) if scalar else out

    def segment_gains(self):
        """Height picked up within each smooth piece."""
        return [complex(sol.y_end) for _lo, _hi, _bz, sol in self._segments]

    def junction_heights(self):
        """Track heights at the piece boundaries, start and end included;
        these are exact accepted integrator endpoints, not interpolants."""
        vals = [self.z_start]
        for _lo, _hi, base_z, sol in self._segments:
            vals.append(complex(base_z + sol.y_end))
        return vals

    def z_prime(self, s):
        """dz/ds from the chart ODE at the interpolated track point."""
        pt = self.base(s)
        vel = self.base.velocity(s)
        zv = self.z(s)
        return (self.chart.p_fn(pt[0], pt[1], zv) * vel[0]
                + self.chart.q_fn(pt[0], pt[1], zv) * vel[1])

    def sample_parameters(self):
        """Accepted-step parameters across all segments (ascending)."""
        out = []
        for lo, _hi, _bz, sol in self._segments:
            out.append(sol.ts - sol.ts[0] + lo)
        return np.unique(np.concatenate(out))


def _piece_rhs(chart, piece, base_z):
    p_fn, q_fn = chart.p_fn, chart.q_fn

    def rhs(t, d):
        pt = piece.pos(t)
        vel = piece.vel(t)
        z = base_z + d
        return p_fn(pt[0], pt[1], z) * vel[0] + q_fn(pt[0], pt[1], z) * vel[1]

    return rhs


def _locate_exit(chart, piece, base_z, sol, lo_global):
    """Bisect the last accepted step to the first parameter at the margin."""
    ts = sol.ts
    a, b = float(ts[-2]), float(ts[-1])
    for _ in range(60):
        mid = 0.5 * (a + b)
        pt = piece.pos(mid)
        inside = chart.domain.contains((pt[0], pt[1], base_z + sol(mid)),
                                       margin=_EXIT_MARGIN)
        if inside:
            a = mid
        else:
            b = mid
    s_exit = lo_global + b - ts[0]
    pt = piece.pos(b)
    point = (complex(pt[0]), complex(pt[1]), complex(base_z + sol(b)))
    raise DomainExit(s_exit, point)


def lift_path(chart: DistributionChart, path: ParamPath, z0: complex,
              rtol: float = 1e-11, atol: float = 1e-13,
              max_step_divisor: int = 16) -> LiftedPath:
    """Lift a planar path through the chart starting from height z0.

    Integrates z' = P x' + Q y' per smooth piece (piece corners are hard
    breakpoints) in offset form, with adaptive embedded error control; the
    relative tolerance acts on the height gained within the current piece.
    Raises DomainExit as soon as the track comes within the exit margin of
    the domain boundary, reporting the localized exit parameter and point.
    """
    start = path(path.a)
    if not chart.domain.contains((start[0], start[1], z0)):
        raise DomainExit(path.a, (complex(start[0]), complex(start[1]), complex(z0)),
                         "lift start point is outside the chart domain")

    segments = []
    z = complex(z0)
    offset = 0.0
    for piece in path.pieces:
        rhs = _piece_rhs(chart, piece, z)
        span = piece.b - piece.a

        def outside(t, d, piece=piece, base_z=z):
            pt = piece.pos(t)
            return not chart.domain.contains((pt[0], pt[1], base_z + d),
                                             margin=_EXIT_MARGIN)

        sol = integrate(rhs, piece.a, piece.b, 0j, rtol=rtol, atol=atol,
                        max_step=span / max_step_divisor, stop_condition=outside)
        if sol.stopped:
            _locate_exit(chart, piece, z, sol, offset)
        segments.append((offset, offset + span, z, sol))
        z = complex(z + sol.y_end)
        offset += span
    return LiftedPath(path, chart, segments, z0)


# ---------------------------------------------------------------------------
# Field lifting and non-integrability measures
# ---------------------------------------------------------------------------

def legendrian_lift_field(A: ex.RationalExpr, B: ex.RationalExpr,
                          chart: DistributionChart):
    """Tangent lift of the planar field (A, B): components (A, B, A*P + B*Q).

    The chart 1-form annihilates the lifted field identically, by
    construction. A and B must not involve z.
    """
    for name, e in (("A", A), ("B", B)):
        if ex.uses_variable(e, "z"):
            raise ValueError(f"{name} must depend only on x and y")
    third = ex.Add(ex.Mul(A, chart.P), ex.Mul(B, chart.Q))
    return A, B, third


def integrability_defect(chart: DistributionChart, point) -> complex:
    """Coefficient of the chart form wedge its differential in the volume
    basis: P_y - Q_x - P*Q_z + Q*P_z, evaluated at the point.

    Identically zero exactly when the plane field is integrable; the normal
    form pins it to -1 at the origin.
    """
    x, y, z = (complex(c) for c in point)
    return complex(chart.p_y_fn(x, y, z) - chart.q_x_fn(x, y, z)
                   - chart.p_fn(x, y, z) * chart.q_z_fn(x, y, z)
                   + chart.q_fn(x, y, z) * chart.p_z_fn(x, y, z))


@dataclass(frozen=True)
class DeviationReport:
    """How tightly a lift respects |z(s) - z(0)| <= 2 * epsilon * arclength."""
    max_ratio: float
    sup_deviation: float
    bound_at_sup: float


def lift_deviation_check(chart: DistributionChart, lifted: LiftedPath,
                         slack: float = 1e-9) -> DeviationReport:
    """Verify sup_s |z(s) - z(0)| <= 2 * epsilon * length(base up to s).

    Checked at every accepted integrator step; returns the worst ratio.
    Violation (ratio above 1 + slack) raises CheckFailure, signalling an
    epsilon estimate that is too small or an integrator fault.
    """
    ss = lifted.sample_parameters()
    lengths = cumulative_length(lifted.base, ss)
    devs = np.abs(lifted.z(ss) - lifted.z_start)
    bound = 2.0 * chart.epsilon * lengths + slack
    ratios = devs / np.where(bound > 0, bound, 1.0)
    k = int(np.argmax(ratios))
    report = DeviationReport(float(ratios[k]), float(devs[k]), float(bound[k]))
    if report.max_ratio > 1.0 + slack:
        raise CheckFailure(
            f"lift deviation {report.sup_deviation:.3e} exceeds "
            f"2*epsilon*length = {report.bound_at_sup:.3e}")
    return report
