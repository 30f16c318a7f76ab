"""Run configuration as sectioned key-value text (INI syntax).

Example::

    [grid]
    n1 = 32
    n2 = 32
    n3 = 32
    l1 = 2*pi
    l2 = 2*pi
    l3 = 2*pi

    [params]
    mu = 0.1
    ...

Lengths accept a plain float, ``pi`` or ``<float>*pi``. ``emit_config``
writes floats with ``repr`` so that parsing its output reproduces the
configuration exactly.
"""
from __future__ import annotations

import configparser
import math
import re
import warnings
from dataclasses import dataclass, field, replace

from .dynamics import PhysParams
from .spectral import GridSpec

__all__ = [
    "ConfigError",
    "InitConfig",
    "TimeConfig",
    "OutputConfig",
    "RunConfig",
    "parse_config",
    "emit_config",
    "SIGMA_WINDOW",
]

# Admissible sigma for the smallest regularity index k = 4: ((k-1)/(2(k-2)), 1).
SIGMA_WINDOW = (0.75, 1.0)


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)


@dataclass(frozen=True)
class InitConfig:
    seed: int
    spectrum_slope: float
    k_peak: float
    eps_u: float
    eps_B: float
    eps_w: float
    horizontal_mean_free: bool = False
    k_vertical: float | None = None


@dataclass(frozen=True)
class TimeConfig:
    t_end: float
    dt_max: float
    sample_interval: float
    cfl_safety: float = 0.5


@dataclass(frozen=True)
class OutputConfig:
    series: str
    checkpoint: str
    checkpoint_interval: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    params: PhysParams
    init: InitConfig
    time: TimeConfig
    output: OutputConfig
    sigma: float = 0.8

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, init=replace(self.init, seed=seed))

    def with_amplitudes(self, eps_u: float, eps_B: float, eps_w: float) -> "RunConfig":
        return replace(self, init=replace(self.init, eps_u=eps_u, eps_B=eps_B, eps_w=eps_w))


@dataclass(frozen=True)
class _Key:
    kind: str
    required: bool = True
    default: object = None


_SCHEMA: dict[str, dict[str, _Key]] = {
    "grid": {
        "n1": _Key("int"), "n2": _Key("int"), "n3": _Key("int"),
        "l1": _Key("length"), "l2": _Key("length"), "l3": _Key("length"),
        "dealias_fraction": _Key("float", False, 2.0 / 3.0),
    },
    "params": {
        "mu": _Key("float"), "nu": _Key("float"), "gamma": _Key("float"),
        "kappa": _Key("float"), "chi": _Key("float"),
        "allow_degenerate": _Key("bool", False, False),
    },
    "init": {
        "seed": _Key("int"), "spectrum_slope": _Key("float"), "k_peak": _Key("float"),
        "eps_u": _Key("float"), "eps_B": _Key("float"), "eps_w": _Key("float"),
        "horizontal_mean_free": _Key("bool", False, False),
        "k_vertical": _Key("optfloat", False, None),
    },
    "time": {
        "t_end": _Key("float"), "dt_max": _Key("float"), "sample_interval": _Key("float"),
        "cfl_safety": _Key("float", False, 0.5),
    },
    "diagnostics": {"sigma": _Key("float", False, 0.8)},
    "output": {
        "series": _Key("str"), "checkpoint": _Key("str"),
        "checkpoint_interval": _Key("float", False, 0.0),
    },
}

_PI = re.compile(r"^\s*(?:([-+0-9.eE]+)\s*\*\s*)?pi\s*$")


def _convert(kind: str, raw: str, name: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "optfloat":
            return None if raw.lower() in ("", "none") else float(raw)
        if kind == "length":
            m = _PI.match(raw)
            if m:
                return (float(m.group(1)) if m.group(1) else 1.0) * math.pi
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind == "str":
            if not raw:
                raise ValueError(raw)
            return raw
    except ValueError:
        pass
    raise ConfigError(f"{name}: expected {kind}, got {raw!r}", name)


def _check(cond: bool, name: str, msg: str):
    if not cond:
        raise ConfigError(f"{name}: {msg}", name)


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; every problem is reported with its key."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc

    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section)
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}", f"{section}.{key}")

    missing = [
        f"{sec}.{key}"
        for sec, keys in _SCHEMA.items()
        for key, spec in keys.items()
        if spec.required and not (cp.has_section(sec) and key in cp[sec])
    ]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing), missing[0])

    v: dict[str, dict] = {}
    for sec, keys in _SCHEMA.items():
        v[sec] = {}
        for key, spec in keys.items():
            if cp.has_section(sec) and key in cp[sec]:
                v[sec][key] = _convert(spec.kind, cp[sec][key], f"{sec}.{key}")
            else:
                v[sec][key] = spec.default
    return _build(v)


def _build(v) -> RunConfig:
    g = v["grid"]
    for k in ("n1", "n2", "n3"):
        _check(g[k] >= 4 and g[k] % 2 == 0, f"grid.{k}", "must be an even integer >= 4")
    for k in ("l1", "l2", "l3"):
        _check(g[k] > 0, f"grid.{k}", "must be positive")
    _check(0 < g["dealias_fraction"] <= 1, "grid.dealias_fraction", "must lie in (0, 1]")
    grid = GridSpec(**g)

    p = v["params"]
    for k in ("mu", "nu", "gamma"):
        _check(p[k] > 0, f"params.{k}", "must be positive")
    for k in ("kappa", "chi"):
        if p["allow_degenerate"]:
            _check(p[k] >= 0, f"params.{k}", "must be nonnegative")
        else:
            _check(p[k] > 0, f"params.{k}", "must be positive (set allow_degenerate = true to override)")
    params = PhysParams(**p)

    i = v["init"]
    _check(i["k_peak"] > 0, "init.k_peak", "must be positive")
    for k in ("eps_u", "eps_B", "eps_w"):
        _check(i[k] >= 0, f"init.{k}", "must be nonnegative")
    if i["k_vertical"] is not None:
        _check(i["k_vertical"] > 0, "init.k_vertical", "must be positive")
    init = InitConfig(**i)

    t = v["time"]
    _check(t["t_end"] >= 0, "time.t_end", "must be nonnegative")
    _check(t["dt_max"] > 0, "time.dt_max", "must be positive")
    _check(t["sample_interval"] > 0, "time.sample_interval", "must be positive")
    _check(0 < t["cfl_safety"] <= 1, "time.cfl_safety", "must lie in (0, 1]")
    time = TimeConfig(**t)

    o = v["output"]
    _check(o["checkpoint_interval"] >= 0, "output.checkpoint_interval", "must be nonnegative")
    output = OutputConfig(**o)

    sigma = v["diagnostics"]["sigma"]
    _check(0 < sigma < 1, "diagnostics.sigma", "must lie in (0, 1)")
    if not SIGMA_WINDOW[0] < sigma < SIGMA_WINDOW[1]:
        warnings.warn(
            f"sigma = {sigma} lies outside {SIGMA_WINDOW}, the admissible window for k = 4",
            stacklevel=3,
        )
    return RunConfig(grid, params, init, time, output, sigma)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: RunConfig) -> str:
    g, p, i, t, o = cfg.grid, cfg.params, cfg.init, cfg.time, cfg.output
    values = {
        "grid": {k: getattr(g, k) for k in _SCHEMA["grid"]},
        "params": {k: getattr(p, k) for k in _SCHEMA["params"]},
        "init": {k: getattr(i, k) for k in _SCHEMA["init"]},
        "time": {k: getattr(t, k) for k in _SCHEMA["time"]},
        "diagnostics": {"sigma": cfg.sigma},
        "output": {k: getattr(o, k) for k in _SCHEMA["output"]},
    }
    lines = []
    for sec, entries in values.items():
        lines.append(f"[{sec}]")
        for key, value in entries.items():
            if _SCHEMA[sec][key].kind in ("float", "length", "optfloat") and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)
