"""Experiment configuration: flat key-value files plus CLI overrides.

Format: INI-like sections [chart], [run], [tolerances]; `key = value` lines;
# comments. Every key can be overridden on the command line as
--section.key=value. Numeric values are parsed with the expression grammar,
so `2^-4` and `0.001+0.001*i` are valid scalars.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr as ex
from .errors import ConfigError
from .foliation import length_bound
from .lifting import chart_domain, make_chart

__all__ = ["ExperimentConfig", "load_config", "parse_overrides"]

_SECTIONS = ("chart", "run", "tolerances")

DEFAULTS = {
    "chart.P": "-y/2",
    "chart.Q": "x/2",
    "chart.delta": "0.05",
    "chart.clamp": "",
    "run.r": "auto",
    "run.r_list": "auto",
    "run.w": "auto",
    "run.N": "10",
    "run.samples": "100",
    "run.seed": "7",
    "run.x0": "0.01, 0.001+0.001*i",
    "run.out": "",
    "run.figures": "true",
    "tolerances.ode_rtol": "1e-11",
    "tolerances.ode_atol": "1e-13",
    "tolerances.quad_tol": "1e-9",
}


def _scalar(key, raw) -> complex:
    try:
        node = ex.parse(raw)
    except ex.ExprSyntaxError as err:
        raise ConfigError(f"{key}: {err}") from None
    if node.variables():
        raise ConfigError(f"{key}: value {raw!r} must be a constant")
    return ex.evaluate(node, (0, 0, 0))


def _real(key, raw) -> float:
    val = _scalar(key, raw)
    if val.imag != 0.0:
        raise ConfigError(f"{key}: value {raw!r} must be real")
    return val.real


def _int(key, raw) -> int:
    val = _real(key, raw)
    if val != int(val):
        raise ConfigError(f"{key}: value {raw!r} must be an integer")
    return int(val)


def _bool(key, raw) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: value {raw!r} is not a boolean")


def parse_config_text(text: str, source="<config>") -> dict:
    """Parse the sectioned key-value format into {'section.key': raw}."""
    out = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: key outside any section")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
            raw = raw[1:-1]
        out[f"{section}.{key}"] = raw
    return out


def parse_overrides(pairs) -> dict:
    """Parse --section.key=value CLI override strings."""
    out = {}
    for item in pairs:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognized argument {item!r} "
                              "(expected --section.key=value)")
        key, raw = item[2:].split("=", 1)
        section = key.split(".", 1)[0]
        if section not in _SECTIONS or "." not in key:
            raise ConfigError(f"unknown configuration key {key!r}")
        out[key] = raw
    return out


@dataclass
class ExperimentConfig:
    """Fully resolved configuration with the validated chart."""
    chart_p: str
    chart_q: str
    delta: float
    clamp: float | None
    nu: float
    chart: object
    r: float
    r_list: list
    w: complex
    n_max: int
    samples: int
    seed: int
    x0_list: list
    out: str
    figures: bool
    ode_rtol: float
    ode_atol: float
    quad_tol: float
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Flat dict used for the CSV header (deterministic content)."""
        return {
            "chart.P": self.chart_p, "chart.Q": self.chart_q,
            "chart.delta": self.delta,
            "run.r": self.r, "run.r_list": self.r_list,
            "run.w": _fmt_complex(self.w), "run.N": self.n_max,
            "run.samples": self.samples, "run.seed": self.seed,
            "tolerances.ode_rtol": self.ode_rtol,
            "tolerances.ode_atol": self.ode_atol,
            "tolerances.quad_tol": self.quad_tol,
        }


def _fmt_complex(z) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}i"


def load_config(path=None, overrides=None, experiment="selftest") -> ExperimentConfig:
    """Merge defaults, an optional config file and CLI overrides, then build
    and validate the chart and the experiment grid."""
    merged = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            raise ConfigError(f"cannot read config file {path}: {err}") from None
        file_keys = parse_config_text(text, source=str(path))
        if any(k.startswith("chart.") for k in file_keys):
            for required in ("chart.P", "chart.Q"):
                if required not in file_keys:
                    raise ConfigError(f"missing required key {required}")
        merged.update(file_keys)
    if overrides:
        merged.update(overrides)

    unknown = set(merged) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown configuration key {sorted(unknown)[0]!r}")

    delta = _real("chart.delta", merged["chart.delta"])
    if delta <= 0:
        raise ConfigError("chart.delta must be positive")
    clamp = None if not merged["chart.clamp"] else _real("chart.clamp", merged["chart.clamp"])

    try:
        p_expr = ex.parse(merged["chart.P"])
    except ex.ExprSyntaxError as err:
        raise ConfigError(f"chart.P: {err}") from None
    try:
        q_expr = ex.parse(merged["chart.Q"])
    except ex.ExprSyntaxError as err:
        raise ConfigError(f"chart.Q: {err}") from None

    nu = length_bound()
    chart = make_chart(p_expr, q_expr, chart_domain(delta, nu, clamp))

    r_auto = delta / (4.0 * nu)
    raw_r = merged["run.r"].strip()
    r = r_auto if raw_r in ("", "auto") else _real("run.r", raw_r)

    raw_w = merged["run.w"].strip()
    w = complex(0.1 * delta) if raw_w in ("", "auto") else _scalar("run.w", raw_w)

    raw_list = merged["run.r_list"].strip()
    if raw_list in ("", "auto"):
        r_list = [r_auto * 2.0 ** k for k in range(3, -4, -1)]
    else:
        r_list = [_real("run.r_list", item) for item in raw_list.split(",") if item.strip()]

    x0_list = [_scalar("run.x0", item) for item in merged["run.x0"].split(",") if item.strip()]

    cfg = ExperimentConfig(
        chart_p=merged["chart.P"], chart_q=merged["chart.Q"], delta=delta,
        clamp=clamp, nu=nu, chart=chart, r=r, r_list=r_list, w=w,
        n_max=_int("run.N", merged["run.N"]),
        samples=_int("run.samples", merged["run.samples"]),
        seed=_int("run.seed", merged["run.seed"]),
        x0_list=x0_list,
        out=merged["run.out"].strip(),
        figures=_bool("run.figures", merged["run.figures"]),
        ode_rtol=_real("tolerances.ode_rtol", merged["tolerances.ode_rtol"]),
        ode_atol=_real("tolerances.ode_atol", merged["tolerances.ode_atol"]),
        quad_tol=_real("tolerances.quad_tol", merged["tolerances.quad_tol"]),
        raw=merged)

    _validate_grid(cfg, experiment)
    return cfg


def _validate_grid(cfg: ExperimentConfig, experiment: str):
    """Reject grid points violating the smallness hypotheses, by name."""
    if experiment not in ("displace", "accumulate"):
        return
    radii = cfg.r_list if experiment == "displace" else [cfg.r]
    for r in radii:
        for name, ok in (("0 < r < delta", 0.0 < r < cfg.delta),
                         ("|w| < delta", abs(cfg.w) < cfg.delta),
                         ("r + |w| < delta", r + abs(cfg.w) < cfg.delta)):
            if not ok:
                raise ConfigError(
                    f"grid point r={r:g}, w={_fmt_complex(cfg.w)} rejected: "
                    f"hypothesis '{name}' fails")
    if experiment == "accumulate" and not (1 <= cfg.n_max <= 20):
        raise ConfigError("run.N must be between 1 and 20")
