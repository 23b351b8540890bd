"""Command-line entry point.

    legendrian-lift <subcommand> [--config FILE] [--out PATH] [--no-figures]
                                 [--section.key=value ...]

Subcommands: holonomy, center, gamma, displace, accumulate, selftest.
Each writes a CSV whose first line is a '#'-prefixed JSON echo of the
configuration (plus seed and version), and renders PNG figures next to it
unless figures are disabled. Exit codes: 0 pass, 1 check failure, 2 config
error, 3 numerical failure or domain exit. LEGENDRIAN_LIFT_THREADS controls
grid parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, figures, foliation as fol, geometry, selftest
from .config import load_config, parse_overrides
from .errors import CheckFailure, ConfigError, NumericalError

EXPERIMENTS = ("holonomy", "center", "gamma", "displace", "accumulate", "selftest")


def _fmt(value):
    """Serialize one CSV cell; complex as re+imi with 17 significant digits."""
    if isinstance(value, complex):
        return f"{value.real:.17g}{value.imag:+.17g}i"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, bool):
        return "true" if value else "false"
    return "" if value is None else str(value)


def _common(cfg):
    return {
        "r": _fmt(cfg.r), "w": _fmt(cfg.w),
        "ode_rtol": _fmt(cfg.ode_rtol), "ode_atol": _fmt(cfg.ode_atol),
        "quad_tol": _fmt(cfg.quad_tol),
    }


def write_csv(path, meta, fieldnames, rows):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.DictWriter(fh, fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return str(path)


# ---------------------------------------------------------------------------
# Experiment runners: each returns (fieldnames, rows, fig_writer, summary, code)
# ---------------------------------------------------------------------------

def _run_holonomy(cfg):
    fields = ["experiment", "loop", "quantity", "x0", "value", "reference",
              "rel_err"] + list(_common(cfg))
    com = _common(cfg)
    big = fol.center_holonomy_loop()
    rows = []

    def add(loop, quantity, x0, value, reference):
        rel = abs(value - reference) / max(abs(reference), 1e-300)
        rows.append({"experiment": "holonomy", "loop": loop, "quantity": quantity,
                     "x0": x0, "value": value, "reference": reference,
                     "rel_err": rel, **com})

    for x0 in cfg.x0_list:
        once = fol.holonomy_map(big, x0, rel_tol=cfg.quad_tol)
        add("C", "transport", x0, once, -x0)
        add("C", "transport_twice", x0, fol.holonomy_map(big, once, rel_tol=cfg.quad_tol), x0)
    quad = geometry.contour_integral(fol.holonomy_form().as_form(), big, cfg.quad_tol)
    add("C", "contour_integral", None, quad, -2j * np.pi)
    add("C", "residue_theorem", None, fol.residue_oracle(big, rel_tol=cfg.quad_tol),
        -2j * np.pi)
    tau = fol.halving_loop()
    add("tau", "transport_exponent", None, fol.transport_exponent_end(),
        complex(-np.log(2.0)))
    add("tau", "residue_theorem_half", None,
        0.5 * fol.residue_oracle(tau, rel_tol=cfg.quad_tol), complex(-np.log(2.0)))

    def figs(stem):
        return figures.render_holonomy(stem.with_name(stem.name + "_loops.png"))

    worst = max(row["rel_err"] for row in rows)
    return fields, rows, figs, f"holonomy: {len(rows)} checks, worst relative error {worst:.2e}", 0


def _run_center(cfg):
    fields = ["experiment", "quantity", "value", "reference"] + list(_common(cfg))
    com = _common(cfg)
    orbit = fol.compute_orbit(1.0)
    nu = fol.length_bound()
    dev = fol.real_form_identity_check(cfg.samples, seed=cfg.seed)
    th = np.linspace(0.0, 2.0 * np.pi, 721)
    form = fol.center_form()
    pthv = orbit.path()
    tangency = max(abs(form.value(pthv(t), pthv.velocity(t))) for t in th)

    rows = [{"experiment": "center", "quantity": q, "value": v, "reference": ref, **com}
            for q, v, ref in (
                ("closure_residual", orbit.closure_residual, 0.0),
                ("rho_at_0", orbit.rho(0.0), 1.0),
                ("sup_rho", orbit.profile.sup_rho, None),
                ("sup_drho", orbit.profile.sup_drho, None),
                ("orbit_unit_length", fol.orbit_unit_length(), None),
                ("connector_unit_length", fol.connecting_curve_unit_length(), None),
                ("nu", nu, None),
                ("real_form_max_dev", dev, 0.0),
                ("tangency_max", tangency, 0.0),
            )]

    def figs(stem):
        return figures.render_center(orbit, stem.with_name(stem.name + "_orbit.png"))

    return fields, rows, figs, (f"center: closure {orbit.closure_residual:.2e}, "
                                f"nu = {nu:.6f}, tangency {tangency:.2e}"), 0


def _run_gamma(cfg):
    fields = ["experiment", "r", "start", "end", "target_end", "end_err_per_r",
              "curve_length", "length_over_r", "tangency_max", "w",
              "ode_rtol", "ode_atol", "quad_tol"]
    com = _common(cfg)
    form = fol.center_form()
    s_samples = np.linspace(0.0, 2.0 * np.pi, 361)
    rows = []
    for r in sorted(cfg.r_list):
        curve = fol.connecting_curve(r)
        end = curve(curve.b)
        target = np.array([r / 2.0, 0.0], dtype=complex)
        err = float(np.abs(end - target).max()) / r
        ln = geometry.length(curve, cfg.quad_tol)
        tangency = max(abs(form.value(curve(s), curve.velocity(s))) for s in s_samples)
        rows.append({"experiment": "gamma", "r": r, "start": curve(0.0)[0],
                     "end": end[0], "target_end": complex(r / 2.0),
                     "end_err_per_r": err, "curve_length": ln,
                     "length_over_r": ln / r, "tangency_max": tangency,
                     "w": com["w"], "ode_rtol": com["ode_rtol"],
                     "ode_atol": com["ode_atol"], "quad_tol": com["quad_tol"]})

    def figs(stem):
        return figures.render_gamma(sorted(cfg.r_list),
                                    stem.with_name(stem.name + "_curve.png"))

    worst = max(row["end_err_per_r"] for row in rows)
    return fields, rows, figs, f"gamma: {len(rows)} radii, worst endpoint error {worst:.2e} per r", 0


def _run_displace(cfg):
    fields = ["experiment", "r", "w", "delta_z", "abs_delta", "abs_delta_over_r2",
              "surface_value", "stokes_gap", "slope", "c_est", "epsilon", "M",
              "ode_rtol", "ode_atol", "quad_tol"]
    scan = analysis.displacement_scan(cfg.chart, cfg.r_list, cfg.w,
                                      rtol=cfg.ode_rtol, atol=cfg.ode_atol)
    checked = [analysis.stokes_cross_check(cfg.chart, rec.r, cfg.w,
                                           rtol=cfg.ode_rtol, atol=cfg.ode_atol,
                                           quad_tol=cfg.quad_tol)
               for rec in scan.records]
    rows = []
    for rec in sorted(checked, key=lambda rec: rec.r):
        rows.append({"experiment": "displace", "r": rec.r, "w": rec.w,
                     "delta_z": rec.delta, "abs_delta": rec.abs_delta,
                     "abs_delta_over_r2": rec.abs_delta / rec.r ** 2,
                     "surface_value": rec.surface_value,
                     "stokes_gap": rec.stokes_gap, "slope": scan.slope,
                     "c_est": scan.c_est, "epsilon": rec.epsilon, "M": rec.M,
                     "ode_rtol": cfg.ode_rtol, "ode_atol": cfg.ode_atol,
                     "quad_tol": cfg.quad_tol})

    def figs(stem):
        return figures.render_displace(checked, scan.slope, scan.c_est,
                                       stem.with_name(stem.name + "_scaling.png"))

    summary = (f"displace: slope {scan.slope:.6f}, c_est {scan.c_est:.4g}, "
               f"eps*M {scan.eps_m:.3g}, worst stokes gap "
               f"{max(rec.stokes_gap for rec in checked):.2e}")
    for warning in scan.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return fields, rows, figs, summary, 0


def _run_accumulate(cfg):
    fields = ["experiment", "r", "w", "n", "w_n", "u_n", "v_n", "gap",
              "vu_gap", "bound", "loop_length", "length_budget", "slope",
              "c_est", "M", "nu", "ode_rtol", "ode_atol", "quad_tol"]
    run = analysis.accumulation_run(cfg.chart, cfg.r, cfg.w, cfg.n_max,
                                    rtol=cfg.ode_rtol, atol=cfg.ode_atol)
    rows = []
    for k in range(len(run.w_seq)):
        rows.append({"experiment": "accumulate", "r": run.r, "w": run.w,
                     "n": k + 1, "w_n": run.w_seq[k], "u_n": run.u_seq[k],
                     "v_n": run.v_seq[k], "gap": float(run.gaps[k]),
                     "vu_gap": float(run.vu_gaps[k]),
                     "bound": float(run.bound_values[k]),
                     "loop_length": float(run.loop_lengths[k]),
                     "length_budget": run.length_budget, "slope": run.slope,
                     "c_est": run.c_est, "M": run.M, "nu": run.nu,
                     "ode_rtol": cfg.ode_rtol, "ode_atol": cfg.ode_atol,
                     "quad_tol": cfg.quad_tol})

    def figs(stem):
        return figures.render_accumulate(run, stem.with_name(stem.name + "_decay.png"))

    note = "" if run.truncated_at is None else f" (truncated at n={run.truncated_at})"
    summary = (f"accumulate: {len(rows)} loops, decay exponent {run.slope:.4f}, "
               f"budget 4*nu*r = {run.length_budget:.4g}{note}")
    return fields, rows, figs, summary, 0


def _run_selftest(cfg):
    fields = ["experiment", "criterion", "passed", "elapsed_s", "detail"]
    results = selftest.run_all(progress=print)
    rows = [{"experiment": "selftest", "criterion": res.criterion,
             "passed": res.passed, "elapsed_s": res.elapsed, "detail": res.detail}
            for res in results]
    n_fail = sum(not res.passed for res in results)
    summary = (f"selftest: {len(results) - n_fail}/{len(results)} criteria passed")
    return fields, rows, None, summary, (0 if n_fail == 0 else 1)


_RUNNERS = {
    "holonomy": _run_holonomy,
    "center": _run_center,
    "gamma": _run_gamma,
    "displace": _run_displace,
    "accumulate": _run_accumulate,
    "selftest": _run_selftest,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="legendrian-lift",
        description="Lifting experiments for a plane field dz = P dx + Q dy.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None, help="config file path")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering next to the CSV")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        overrides = parse_overrides(extra)
        cfg = load_config(args.config, overrides, experiment=args.experiment)
        fieldnames, rows, fig_writer, summary, code = _RUNNERS[args.experiment](cfg)

        out = args.out or cfg.out or f"{args.experiment}.csv"
        meta = {"experiment": args.experiment, "version": __version__,
                "seed": cfg.seed, "config": cfg.echo()}
        csv_path = write_csv(out, meta, fieldnames, rows)
        written = [csv_path]
        if fig_writer is not None and cfg.figures and not args.no_figures:
            stem = Path(csv_path).with_suffix("")
            written += fig_writer(stem)
        print(summary)
        print("wrote: " + ", ".join(written))
        return code
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except CheckFailure as err:
        print(f"check failure: {err}", file=sys.stderr)
        return 1
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
