"""The explicit planar foliation driving every experiment.

The foliation is dual to a logarithmic 1-form with four complex-line poles
and residues tuned by the constant log(2)/pi. Its real trace is a global
center: all real leaves are closed curves around the origin, computed here
as a polar profile rho(theta). On the blow-up t-line the same foliation
induces a holonomy form whose contour integrals halve the x-coordinate
along an explicit loop; the resulting connecting curve joins (r, 0) to
(r/2, 0) inside a single complex leaf.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import geometry
from .errors import CheckFailure, IntegrationError, NumericalError
from .geometry import ParamPath, circle_path, contour_integral, winding_number
from .ode import OdeSolution, integrate

__all__ = [
    "LOG2_OVER_PI",
    "LogTerm",
    "LogarithmicForm",
    "center_form",
    "real_form_identity_check",
    "CenterOrbit",
    "compute_orbit",
    "length_bound",
    "holonomy_form",
    "holonomy_map",
    "residue_oracle",
    "connecting_curve",
    "transport_exponent_end",
    "center_holonomy_loop",
    "halving_loop",
]

LOG2_OVER_PI = np.log(2.0) / np.pi

_PROFILE_SAMPLES = 4096
TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Logarithmic forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogTerm:
    """residue * dL/L where L(p) = coeffs . p + offset is affine."""
    coeffs: tuple
    offset: complex
    residue: complex

    def linear_value(self, point):
        acc = self.offset
        for c, p in zip(self.coeffs, point):
            acc = acc + c * p
        return acc

    def linear_tangent(self, tangent):
        acc = 0j
        for c, v in zip(self.coeffs, tangent):
            acc = acc + c * v
        return acc


@dataclass(frozen=True)
class LogarithmicForm:
    """Sum of residue-weighted logarithmic differentials of affine forms."""
    terms: tuple

    def value(self, point, tangent):
        """Evaluate on a (point, tangent) pair; numpy arrays broadcast."""
        acc = 0j
        for term in self.terms:
            acc = acc + term.residue * term.linear_tangent(tangent) / term.linear_value(point)
        return acc

    def residue_sum(self):
        return sum(t.residue for t in self.terms)

    def poles(self):
        """Pole locations, for forms in a single variable."""
        out = []
        for t in self.terms:
            if len(t.coeffs) != 1:
                raise ValueError("poles() requires a one-variable form")
            out.append(-t.offset / t.coeffs[0])
        return out

    def coefficients(self, point):
        """Per-coordinate coefficients A_i(point) so the form is sum A_i dx_i."""
        dim = len(self.terms[0].coeffs)
        coeffs = [0j] * dim
        for term in self.terms:
            lv = term.linear_value(point)
            for i in range(dim):
                coeffs[i] = coeffs[i] + term.residue * term.coeffs[i] / lv
        return coeffs

    def dual_field(self, point):
        """Direction field annihilated by a planar form A dx + B dy: (-B, A)."""
        a, b = self.coefficients(point)
        return np.array([-b, a])

    def as_form(self):
        return lambda pt, tan: self.value(pt, tan)


@lru_cache(maxsize=1)
def center_form() -> LogarithmicForm:
    """The four-term logarithmic form whose real trace is a global center.

    Poles on the lines y = +-ix and y = +-3ix; residues sum to 2. The
    imaginary residues +-i*log(2)/pi on the inner pair are what make the
    blow-up holonomy halve rather than rotate.
    """
    lam = LOG2_OVER_PI
    return LogarithmicForm((
        LogTerm((-1j, 1.0 + 0j), 0j, -lam * 1j),
        LogTerm((1j, 1.0 + 0j), 0j, lam * 1j),
        LogTerm((-3j, 1.0 + 0j), 0j, 1.0 + lam * 1j),
        LogTerm((3j, 1.0 + 0j), 0j, 1.0 - lam * 1j),
    ))


def real_form_identity_check(samples: int, seed: int = 0) -> float:
    """Max deviation between the logarithmic form and its real-valued rewrite.

    The same 1-form can be written with purely real ingredients,

        2*lam*(x dy - y dx)/(x^2+y^2) + d(9x^2+y^2)/(9x^2+y^2)
          - 6*lam*(x dy - y dx)/(9x^2+y^2),

    which is what makes the real phase portrait visible at all. Checked at
    random real points and tangents with denominators bounded away from 0;
    deviations above 1e-10 raise CheckFailure.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lam = LOG2_OVER_PI
    form = center_form()
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    while count < samples:
        x, y, u, v = rng.uniform(-2.0, 2.0, size=4)
        if x * x + y * y < 0.05:
            continue
        count += 1
        log_val = form.value((x, y), (u, v))
        rot = x * v - y * u
        real_val = (2 * lam * rot / (x * x + y * y)
                    + (18 * x * u + 2 * y * v) / (9 * x * x + y * y)
                    - 6 * lam * rot / (9 * x * x + y * y))
        dev = abs(log_val - real_val) / (1.0 + abs(log_val))
        worst = max(worst, dev)
    if worst > 1e-10:
        raise CheckFailure(f"real-form identity deviates by {worst:.3e} > 1e-10")
    return worst


# ---------------------------------------------------------------------------
# The real center and its orbits
# ---------------------------------------------------------------------------

def _g(theta):
    return 9.0 * np.cos(theta) ** 2 + np.sin(theta) ** 2


def _g_prime(theta):
    return -8.0 * np.sin(2.0 * theta)


def _log_slope(theta):
    """m(theta) with d(rho)/d(theta) = rho * m(theta), from the real form
    of the center 1-form written in polar coordinates and set to zero."""
    g = _g(theta)
    return -0.5 * (2.0 * LOG2_OVER_PI + _g_prime(theta) / g - 6.0 * LOG2_OVER_PI / g)


class _UnitProfile:
    """Normalized polar profile of the orbit through (1, 0)."""

    def __init__(self, theta, rho, drho, closure_residual, unit_length):
        self.theta = theta
        self.rho_table = rho
        self.drho_table = drho
        self.closure_residual = closure_residual
        self.unit_length = unit_length
        self._interp = OdeSolution(theta, rho.astype(complex), drho.astype(complex), 0, False)
        self.sup_rho = float(np.abs(rho).max())
        self.sup_drho = float(np.abs(drho).max())

    def rho(self, theta):
        val = self._interp(np.mod(theta, TWO_PI))
        return val.real if isinstance(val, np.ndarray) else val.real

    def drho(self, theta):
        # exact ODE relation rather than differentiating the interpolant
        return self.rho(theta) * _log_slope(theta)


@lru_cache(maxsize=1)
def _unit_profile() -> _UnitProfile:
    n = _PROFILE_SAMPLES
    theta = np.linspace(0.0, TWO_PI, n + 1)

    def rhs(t, y):
        if y.real <= 0.0 or not np.isfinite(y.real):
            raise IntegrationError(
                "polar radius lost positivity: orbit is not star-shaped")
        return y * _log_slope(t)

    sol = integrate(rhs, 0.0, TWO_PI, 1.0 + 0j, rtol=1e-12, atol=1e-14,
                    max_step=TWO_PI / n)
    rho = sol(theta).real
    rho[0] = 1.0
    rho[-1] = sol.y_end.real
    drho = rho * _log_slope(theta)
    closure = abs(rho[-1] - rho[0])

    profile = _UnitProfile(theta, rho, drho, closure, unit_length=0.0)
    profile.unit_length = geometry.length(_orbit_path(1.0, profile))
    return profile


def _orbit_path(r, profile) -> ParamPath:
    def pos(th):
        rho = profile.rho(th)
        return np.array([r * rho * np.cos(th), r * rho * np.sin(th)], dtype=complex)

    def vel(th):
        rho = profile.rho(th)
        drho = rho * _log_slope(th)
        return np.array([r * (drho * np.cos(th) - rho * np.sin(th)),
                         r * (drho * np.sin(th) + rho * np.cos(th))], dtype=complex)

    return geometry.from_callable(pos, vel, 0.0, TWO_PI)


@dataclass(frozen=True)
class CenterOrbit:
    """Closed real orbit through (r, 0), stored as r times the shared unit
    profile (the form is invariant under real homotheties, so every orbit
    reuses the same rho table)."""
    radius: float
    profile: _UnitProfile

    @property
    def closure_residual(self):
        return self.profile.closure_residual

    @property
    def arc_length(self):
        return self.radius * self.profile.unit_length

    def rho(self, theta):
        return self.profile.rho(theta)

    def drho(self, theta):
        return self.profile.drho(theta)

    def point(self, theta):
        rho = self.rho(theta)
        return np.array([self.radius * rho * np.cos(theta),
                         self.radius * rho * np.sin(theta)], dtype=complex)

    def path(self) -> ParamPath:
        return _orbit_path(self.radius, self.profile)


def compute_orbit(r: float) -> CenterOrbit:
    """Orbit of the real center through (r, 0), r > 0."""
    if r <= 0:
        raise ValueError("orbit radius must be positive")
    return CenterOrbit(float(r), _unit_profile())


@lru_cache(maxsize=1)
def length_bound() -> float:
    """A single constant dominating, with 5% padding, the unit connecting
    curve length, the unit orbit length, sup|rho| and sup|rho'| (and 1).

    Scaled by r it bounds the curves at radius r; the lifting experiments use
    it to size chart domains.
    """
    profile = _unit_profile()
    unit_gamma = _connecting_profile().unit_length
    return 1.05 * max(unit_gamma, profile.unit_length,
                      profile.sup_rho, profile.sup_drho, 1.0)


# ---------------------------------------------------------------------------
# Blow-up holonomy
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def holonomy_form() -> LogarithmicForm:
    """The 1-form in the blow-up coordinate t governing transport of x.

    Along a curve t(s) inside a leaf, x satisfies 2 dx/x = (this form), so
    loops act on x by exp(half the contour integral). Poles at +-i, +-3i.
    """
    lam = LOG2_OVER_PI
    return LogarithmicForm((
        LogTerm((1.0 + 0j,), -1j, lam * 1j),
        LogTerm((1.0 + 0j,), 1j, -lam * 1j),
        LogTerm((1.0 + 0j,), -3j, -(1.0 + lam * 1j)),
        LogTerm((1.0 + 0j,), 3j, -(1.0 - lam * 1j)),
    ))


def center_holonomy_loop() -> ParamPath:
    """Circle |t - 3i| = 3 through the origin, positively oriented; encloses
    the poles i and 3i and realizes the center's holonomy x -> -x."""
    return circle_path(3j, 3.0, start_angle=-np.pi / 2)


def halving_loop() -> ParamPath:
    """Circle |t - i| = 1 through the origin, positively oriented; transport
    along it multiplies x by exp(-log 2) = 1/2."""
    return circle_path(1j, 1.0, start_angle=-np.pi / 2)


def holonomy_map(loop: ParamPath, x0: complex, rel_tol=1e-10) -> complex:
    """Transport of the transversal coordinate x0 along a closed loop in the
    t-plane: x0 * exp(0.5 * contour integral of the holonomy form)."""
    if x0 == 0:
        raise ValueError("holonomy transport needs a nonzero base point")
    form = holonomy_form()
    total = contour_integral(form.as_form(), loop, rel_tol)
    return complex(x0) * np.exp(0.5 * total)


def residue_oracle(loop: ParamPath, form: LogarithmicForm | None = None,
                   rel_tol=1e-10) -> complex:
    """Residue-theorem value of the contour integral over a closed loop,
    cross-checked against direct quadrature to 1e-9 relative.

    Two genuinely independent computations: winding numbers times residues
    on one side, adaptive contour quadrature on the other. Disagreement
    raises NumericalError.
    """
    if form is None:
        form = holonomy_form()
    theorem = 0j
    for term, pole in zip(form.terms, form.poles()):
        w = winding_number(loop, pole, rel_tol)
        theorem += 2j * np.pi * w * term.residue
    direct = contour_integral(form.as_form(), loop, rel_tol)
    gap = abs(theorem - direct)
    if gap > 1e-9 * (1.0 + abs(theorem)):
        raise NumericalError(
            f"residue theorem ({theorem}) and quadrature ({direct}) disagree by {gap:.3e}")
    return theorem


# ---------------------------------------------------------------------------
# The connecting curve r -> r/2
# ---------------------------------------------------------------------------

class _ConnectingProfile:
    """Cumulative transport exponent f(s) along the halving loop, tabulated
    once; the curve at radius r is (r e^f, tau r e^f)."""

    def __init__(self, grid, f_table, unit_length):
        self._interp = OdeSolution(grid, f_table, self._fprime(grid), 0, False)
        self.grid = grid
        self.f_table = f_table
        self.unit_length = unit_length

    @staticmethod
    def _tau(s):
        return 1j - 1j * np.exp(1j * s)

    @staticmethod
    def _tau_prime(s):
        return np.exp(1j * s)

    @staticmethod
    def _fprime(s):
        form = holonomy_form()
        return 0.5 * form.value((_ConnectingProfile._tau(s),),
                                (_ConnectingProfile._tau_prime(s),))

    def f(self, s):
        return self._interp(s)

    @property
    def f_end(self):
        return complex(self.f_table[-1])


@lru_cache(maxsize=1)
def _connecting_profile() -> _ConnectingProfile:
    n = _PROFILE_SAMPLES
    grid = np.linspace(0.0, TWO_PI, n + 1)
    f_table = np.empty(n + 1, dtype=complex)
    f_table[0] = 0j
    for k in range(n):
        seg = geometry.kronrod_panel(lambda s: complex(_ConnectingProfile._fprime(s)),
                                     grid[k], grid[k + 1])
        f_table[k + 1] = f_table[k] + seg
    profile = _ConnectingProfile(grid, f_table, unit_length=0.0)
    profile.unit_length = geometry.length(_connecting_path(1.0, profile))
    return profile


def _connecting_path(r, profile) -> ParamPath:
    def pos(s):
        x = r * np.exp(profile.f(s))
        return np.array([x, _ConnectingProfile._tau(s) * x], dtype=complex)

    def vel(s):
        x = r * np.exp(profile.f(s))
        fp = _ConnectingProfile._fprime(s)
        dx = x * fp
        tau = _ConnectingProfile._tau(s)
        dtau = _ConnectingProfile._tau_prime(s)
        return np.array([dx, dtau * x + tau * dx], dtype=complex)

    return geometry.from_callable(pos, vel, 0.0, TWO_PI)


def connecting_curve(r: float) -> ParamPath:
    """Leaf curve from (r, 0) to (r/2, 0) in C^2, parametrized on [0, 2*pi].

    Its x-coordinate is r times the exponential of the cumulative transport
    integral along the halving loop, so the endpoint ratio is exactly the
    holonomy factor 1/2; euclidean length scales linearly in r.
    """
    if r <= 0:
        raise ValueError("curve scale must be positive")
    return _connecting_path(float(r), _connecting_profile())


def transport_exponent_end() -> complex:
    """f(2*pi): cumulative transport exponent over the whole halving loop
    (analytically -log 2)."""
    return _connecting_profile().f_end


def connecting_curve_unit_length() -> float:
    """Arc length of the connecting curve at scale 1 (scales linearly)."""
    return _connecting_profile().unit_length


def orbit_unit_length() -> float:
    """Arc length of the center orbit through (1, 0)."""
    return _unit_profile().unit_length
