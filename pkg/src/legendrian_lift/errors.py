"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, NumericalError (and
subclasses) -> 3, CheckFailure -> 1.
"""


class LiftError(Exception):
    """Base class for all package errors."""


class ConfigError(LiftError):
    """Invalid or incomplete experiment configuration; message names the key."""


class NumericalError(LiftError):
    """A numerical routine could not produce a trustworthy result."""


class QuadratureError(NumericalError):
    """Adaptive quadrature failed to converge or met a non-finite sample."""


class PoleOnPathError(QuadratureError):
    """Integrand is singular on (or numerically too close to) the path."""


class NonIntegralWindingError(NumericalError):
    """Winding integral did not land near an integer."""


class IntegrationError(NumericalError):
    """ODE integration failed (step underflow, loss of validity)."""


class DomainExit(NumericalError):
    """A lifted path reached the chart domain boundary.

    Carries the parameter value and the 3d point where the track left the
    domain margin.
    """

    def __init__(self, param, point, message=None):
        self.param = param
        self.point = point
        super().__init__(message or f"lift left the chart domain at s={param:.6g}")


class CheckFailure(LiftError):
    """A verified bound or acceptance check did not hold."""
