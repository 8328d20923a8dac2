"""Run configuration: JSON file parsing, flag overrides, strict validation.

Unknown keys are rejected and every numeric constraint of the underlying
modules is re-checked here with a field-precise message, so bad runs die at
parse time with exit code 2 instead of deep inside a solve.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * np.pi


@dataclass
class BasisConfig:
    lambda_max: float = 1200.0
    k_max: int = None
    density: int = 16
    refine_tol: float = 1e-12


@dataclass
class RegionConfig:
    x1: tuple = (0.0, math.pi)
    x2: tuple = (0.3, 0.7)


@dataclass
class KernelConfig:
    s0: float = 1.0
    support: tuple = None       # defaults to the middle half of (0, s0)


@dataclass
class ScheduleConfig:
    t_horizon: float = 1.0
    gamma: float = 1.5
    epsilon: float = 0.5
    lambda_cap: float = 1024.0
    reg_threshold: float = 1e-12
    z0_modes: int = 30
    seed: int = 0
    final_tol: float = 1e-4


@dataclass
class SweepsConfig:
    lambda_list: tuple = (25.0, 50.0, 100.0, 200.0, 400.0)
    t_list: tuple = (0.1, 0.2, 0.4, 0.8)


@dataclass
class IoConfig:
    cache_path: str = None
    out_dir: str = "."
    format: str = "csv"         # csv | structured


@dataclass
class RunConfig:
    basis: BasisConfig = field(default_factory=BasisConfig)
    region: RegionConfig = field(default_factory=RegionConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    sweeps: SweepsConfig = field(default_factory=SweepsConfig)
    io: IoConfig = field(default_factory=IoConfig)
    threads: int = 1


_SECTIONS = {
    "basis": (BasisConfig, {"lambda_max": float, "k_max": int, "density": int,
                            "refine_tol": float}),
    "region": (RegionConfig, {"x1": "pair", "x2": "pair"}),
    "kernel": (KernelConfig, {"s0": float, "support": "pair"}),
    "schedule": (ScheduleConfig, {"t_horizon": float, "gamma": float,
                                  "epsilon": float, "lambda_cap": float,
                                  "reg_threshold": float, "z0_modes": int,
                                  "seed": int, "final_tol": float}),
    "sweeps": (SweepsConfig, {"lambda_list": "floats", "t_list": "floats"}),
    "io": (IoConfig, {"cache_path": str, "out_dir": str, "format": str}),
}


def _coerce(kind, value, where):
    try:
        if kind == "pair":
            a, b = (float(v) for v in value)
            return (a, b)
        if kind == "floats":
            return tuple(float(v) for v in value)
        if kind is int:
            if value is None:
                return None
            if isinstance(value, float) and not value.is_integer():
                raise ValueError("not an integer")
            return int(value)
        if kind is float:
            return float(value)
        if kind is str:
            return None if value is None else str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: cannot interpret {value!r}: {exc}") from exc
    raise ConfigError(f"{where}: unsupported value {value!r}")


def _apply_section(cfg_section, name, data):
    _, fields = _SECTIONS[name]
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key {name}.{key}")
        setattr(cfg_section, key, _coerce(fields[key], value, f"{name}.{key}"))


def load_config(path=None, overrides=None):
    """Build a validated RunConfig from an optional file plus overrides.

    ``overrides`` maps dotted keys ("schedule.gamma", "threads") to values
    and wins over file values.
    """
    cfg = RunConfig()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config root must be an object")
        for name, data in doc.items():
            if name == "threads":
                cfg.threads = _coerce(int, data, "threads")
                continue
            if name not in _SECTIONS:
                raise ConfigError(f"unknown key {name}")
            if not isinstance(data, dict):
                raise ConfigError(f"{name} must be an object")
            _apply_section(getattr(cfg, name), name, data)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        if dotted == "threads":
            cfg.threads = _coerce(int, value, "threads")
            continue
        name, _, key = dotted.partition(".")
        if name not in _SECTIONS or key not in _SECTIONS[name][1]:
            raise ConfigError(f"unknown key {dotted}")
        setattr(getattr(cfg, name), key,
                _coerce(_SECTIONS[name][1][key], value, dotted))
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    """Re-validate every module precondition with field-precise messages."""
    b = cfg.basis
    if not b.lambda_max > 0:
        raise ConfigError("basis.lambda_max must be positive")
    if b.k_max is not None and b.k_max < 1:
        raise ConfigError("basis.k_max must be >= 1")
    if b.density < 4:
        raise ConfigError("basis.density must be >= 4")
    if not 0 < b.refine_tol < 1:
        raise ConfigError("basis.refine_tol must be in (0, 1)")
    r = cfg.region
    if not (0.0 <= r.x1[0] < r.x1[1] <= TWO_PI):
        raise ConfigError("region.x1 must satisfy 0 <= a < b <= 2*pi")
    if not (0.0 < r.x2[0] < r.x2[1] < 1.0):
        raise ConfigError("region.x2 must lie strictly inside (0, 1) with a < b")
    k = cfg.kernel
    if not k.s0 > 0:
        raise ConfigError("kernel.s0 must be positive")
    if k.support is None:
        k.support = (0.25 * k.s0, 0.75 * k.s0)
    if not (0.0 < k.support[0] < k.support[1] < k.s0):
        raise ConfigError("kernel.support must lie strictly inside (0, s0)")
    s = cfg.schedule
    if not 0 < s.t_horizon <= 1:
        raise ConfigError("schedule.t_horizon must be in (0, 1]")
    if not s.gamma > 1:
        raise ConfigError("schedule.gamma must be > 1")
    if not 0 < s.epsilon < 1:
        raise ConfigError("schedule.epsilon must be in (0, 1)")
    if not s.lambda_cap > 0:
        raise ConfigError("schedule.lambda_cap must be positive")
    if not 0 < s.reg_threshold < 1:
        raise ConfigError("schedule.reg_threshold must be in (0, 1)")
    if s.z0_modes < 0:
        raise ConfigError("schedule.z0_modes must be >= 0 (0 runs from the zero state)")
    if not s.final_tol > 0:
        raise ConfigError("schedule.final_tol must be positive")
    w = cfg.sweeps
    if any(v <= 0 for v in w.lambda_list):
        raise ConfigError("sweeps.lambda_list entries must be positive")
    if any(not 0 < t for t in w.t_list):
        raise ConfigError("sweeps.t_list entries must be positive")
    if cfg.io.format not in ("csv", "structured"):
        raise ConfigError("io.format must be 'csv' or 'structured'")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    return cfg


def config_dict(cfg):
    """Effective configuration as a plain dict (for the run header)."""
    return {
        "basis": {"lambda_max": cfg.basis.lambda_max, "k_max": cfg.basis.k_max,
                  "density": cfg.basis.density,
                  "refine_tol": cfg.basis.refine_tol},
        "region": {"x1": list(cfg.region.x1), "x2": list(cfg.region.x2)},
        "kernel": {"s0": cfg.kernel.s0, "support": list(cfg.kernel.support)},
        "schedule": {"t_horizon": cfg.schedule.t_horizon,
                     "gamma": cfg.schedule.gamma,
                     "epsilon": cfg.schedule.epsilon,
                     "lambda_cap": cfg.schedule.lambda_cap,
                     "reg_threshold": cfg.schedule.reg_threshold,
                     "z0_modes": cfg.schedule.z0_modes,
                     "seed": cfg.schedule.seed,
                     "final_tol": cfg.schedule.final_tol},
        "sweeps": {"lambda_list": list(cfg.sweeps.lambda_list),
                   "t_list": list(cfg.sweeps.t_list)},
        "io": {"cache_path": cfg.io.cache_path, "out_dir": cfg.io.out_dir,
               "format": cfg.io.format},
        "threads": cfg.threads,
    }
