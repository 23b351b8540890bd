"""Figure rendering for the CLI report path.

Every experiment that writes a CSV can also drop a PNG next to it; these
helpers take the already-computed experiment payloads, never recompute.
Rendering is headless (Agg).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import foliation as fol

__all__ = [
    "render_center",
    "render_holonomy",
    "render_gamma",
    "render_displace",
    "render_accumulate",
]

_DPI = 130


def _save(fig, path):
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def render_center(orbit, path):
    th = np.linspace(0.0, 2.0 * np.pi, 2001)
    rho = orbit.rho(th)
    drho = orbit.drho(th)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(rho * np.cos(th), rho * np.sin(th), lw=1.2)
    ax1.plot([0], [0], "k+", ms=8)
    ax1.plot([1], [0], "ro", ms=4)
    ax1.set_aspect("equal")
    ax1.set_xlabel("x")
    ax1.set_ylabel("y")
    ax1.set_title("unit center orbit")
    ax2.plot(th, rho, label="rho")
    ax2.plot(th, drho, label="rho'")
    ax2.set_xlabel("theta")
    ax2.legend(frameon=False)
    ax2.set_title("polar profile")
    return [_save(fig, path)]


def render_holonomy(path):
    s = np.linspace(0.0, 2.0 * np.pi, 600)
    big = 3j - 3j * np.exp(1j * s)
    small = 1j - 1j * np.exp(1j * s)
    fig, ax = plt.subplots(figsize=(5, 6))
    ax.plot(big.real, big.imag, label="|t-3i|=3 (transport x -> -x)")
    ax.plot(small.real, small.imag, label="|t-i|=1 (transport x -> x/2)")
    poles = fol.holonomy_form().poles()
    ax.plot([p.real for p in poles], [p.imag for p in poles], "kx", ms=8, label="poles")
    ax.set_aspect("equal")
    ax.set_xlabel("Re t")
    ax.set_ylabel("Im t")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("holonomy loops in the blow-up t-plane")
    return [_save(fig, path)]


def render_gamma(r_values, path):
    s = np.linspace(0.0, 2.0 * np.pi, 1200)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for r in r_values:
        curve = fol.connecting_curve(r)
        pts = np.array([curve(si) for si in s])
        ax1.plot(pts[:, 0].real, pts[:, 0].imag, lw=1.0, label=f"r={r:g}")
        ax2.plot(s, np.abs(pts[:, 0]) / r, lw=1.0)
    ax1.set_xlabel("Re x")
    ax1.set_ylabel("Im x")
    ax1.set_title("connecting curve, x-coordinate")
    ax1.legend(frameon=False, fontsize=8)
    ax2.set_xlabel("s")
    ax2.set_ylabel("|x(s)| / r")
    ax2.axhline(0.5, color="k", lw=0.6, ls="--")
    ax2.set_title("radial halving")
    return [_save(fig, path)]


def render_displace(records, slope, c_est, path):
    rs = np.array([rec.r for rec in records])
    gaps = np.array([rec.abs_delta for rec in records])
    stokes = np.array([rec.stokes_gap if rec.stokes_gap is not None else np.nan
                       for rec in records])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.loglog(rs, gaps, "o", ms=4, label="|displacement|")
    ref = gaps[np.argmax(rs)] * (rs / rs.max()) ** 2
    ax1.loglog(rs, ref, "k--", lw=0.8, label="r^2 reference")
    ax1.set_xlabel("r")
    ax1.set_ylabel("|z(end) - w|")
    ax1.legend(frameon=False, fontsize=8)
    ax1.set_title(f"fitted exponent {slope:.4f}, c_est {c_est:.3g}")
    if np.any(np.isfinite(stokes)):
        ax2.loglog(rs, stokes, "s", ms=4, color="tab:red")
        ax2.set_xlabel("r")
        ax2.set_ylabel("relative line/surface gap")
        ax2.set_title("Stokes cross-check")
    return [_save(fig, path)]


def render_accumulate(run, path):
    ns = np.arange(1, len(run.gaps) + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ns, run.gaps, "o-", ms=4, label="|w_n - w|")
    ax.semilogy(ns, run.vu_gaps, "s--", ms=3, label="|v_n - u_n|")
    ax.semilogy(ns, run.bound_values, "k:", label="c e^{4 M nu r} (r/2^n)^2")
    ax.set_xlabel("n")
    ax.set_ylabel("height gap")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title(f"leaf accumulation, decay exponent {run.slope:.3f}")
    return [_save(fig, path)]
