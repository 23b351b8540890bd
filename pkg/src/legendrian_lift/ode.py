"""Adaptive Runge-Kutta integration for scalar complex-valued ODEs.

Dormand-Prince 5(4) pair with FSAL, embedded error control on the complex
modulus, and cubic Hermite dense output from the accepted steps. One holomorphic
scalar equation is all the package needs (path lifting and the polar orbit
profile), so the state is a bare complex number rather than a vector.
"""

from __future__ import annotations

import numpy as np

from .errors import IntegrationError

__all__ = ["OdeSolution", "integrate"]

# Dormand-Prince 5(4) extended Butcher tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# difference between the 5th-order propagating weights and the embedded
# 4th-order weights (includes the FSAL stage)
_E = (
    35 / 384 - 5179 / 57600,
    0.0,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_ORDER_EXP = 1 / 5


class OdeSolution:
    """Accepted-step record with cubic Hermite interpolation.

    Attributes
    ----------
    ts, ys, fs : arrays of accepted times, states and derivatives
    n_steps, n_rejected : step statistics
    stopped : True if a stop_condition ended the run before t1
    """

    def __init__(self, ts, ys, fs, n_rejected, stopped):
        self.ts = np.asarray(ts, dtype=float)
        self.ys = np.asarray(ys, dtype=complex)
        self.fs = np.asarray(fs, dtype=complex)
        self.n_steps = len(self.ts) - 1
        self.n_rejected = n_rejected
        self.stopped = stopped

    @property
    def t_end(self):
        return self.ts[-1]

    @property
    def y_end(self):
        return complex(self.ys[-1])

    def __call__(self, t):
        """Interpolated state; accepts a scalar or an array of times."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.ts, t_arr, side="right") - 1, 0, self.n_steps - 1)
        t0 = self.ts[idx]
        h = self.ts[idx + 1] - t0
        u = (t_arr - t0) / h
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        val = (h00 * self.ys[idx] + h * h10 * self.fs[idx]
               + h01 * self.ys[idx + 1] + h * h11 * self.fs[idx + 1])
        return complex(val) if np.isscalar(t) else val

    def derivative(self, t):
        """Interpolated dy/dt (Hermite derivative), scalar or array input."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.ts, t_arr, side="right") - 1, 0, self.n_steps - 1)
        t0 = self.ts[idx]
        h = self.ts[idx + 1] - t0
        u = (t_arr - t0) / h
        d00 = 6 * u * (u - 1) / h
        d10 = (1 - u) * (1 - 3 * u)
        d01 = -d00
        d11 = u * (3 * u - 2)
        val = (d00 * self.ys[idx] + d10 * self.fs[idx]
               + d01 * self.ys[idx + 1] + d11 * self.fs[idx + 1])
        return complex(val) if np.isscalar(t) else val


def integrate(f, t0, t1, y0, rtol=1e-11, atol=1e-13, max_step=None,
              first_step=None, stop_condition=None, max_steps=1_000_000):
    """Integrate y' = f(t, y) from t0 to t1 (t1 > t0), y complex scalar.

    stop_condition(t, y), when given, is tested after every accepted step;
    the run ends at the first step where it returns True (solution.stopped
    is set, the offending step is kept so callers can localize the event).
    """
    span = t1 - t0
    if span <= 0:
        raise ValueError("integrate requires t1 > t0")
    h_max = span if max_step is None else min(max_step, span)
    h = first_step if first_step is not None else min(h_max, span / 64)
    h_floor = 1e-14 * span

    t = float(t0)
    y = complex(y0)
    fy = complex(f(t, y))
    ts, ys, fs = [t], [y], [fy]
    n_rejected = 0
    stopped = False
    k = [0j] * 7

    while t < t1:
        h = min(h, t1 - t, h_max)
        if h < h_floor:
            raise IntegrationError(f"step size underflow at t={t:.6g}")

        k[0] = fy
        for s in range(1, 7):
            acc = 0j
            row = _A[s]
            for j in range(s):
                acc += row[j] * k[j]
            k[s] = complex(f(t + _C[s] * h, y + h * acc))
        y_new = y + h * (_A[6][0] * k[0] + _A[6][2] * k[2] + _A[6][3] * k[3]
                         + _A[6][4] * k[4] + _A[6][5] * k[5])
        # FSAL: the 7th stage is f at (t+h, y_new)
        f_new = k[6] = complex(f(t + h, y_new))
        err_raw = h * (_E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3]
                       + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k[6])
        scale = atol + rtol * max(abs(y), abs(y_new))
        err = abs(err_raw) / scale if scale > 0 else 0.0

        if err <= 1.0:
            t += h
            y = y_new
            fy = f_new
            ts.append(t)
            ys.append(y)
            fs.append(fy)
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -_ORDER_EXP))
            h *= factor
            if stop_condition is not None and stop_condition(t, y):
                stopped = True
                break
        else:
            n_rejected += 1
            h *= min(1.0, max(_MIN_FACTOR, _SAFETY * err ** -_ORDER_EXP))

        if len(ts) + n_rejected > max_steps:
            raise IntegrationError("maximum step count exceeded")

    return OdeSolution(ts, ys, fs, n_rejected, stopped)
