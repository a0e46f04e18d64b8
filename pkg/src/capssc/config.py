"""Run configuration: INI file with sections [run] [grid] [profile] [suites].

Every key can be overridden from the command line with ``--<key> value``.
``CAPSSC_CONFIG`` names a default file read when ``--config`` is absent.
Surface tension is fixed at 1; other values of sigma are a rescaling of time
and are refused rather than silently converted.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .checkpoint import atomic_write

ENV_VAR = "CAPSSC_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # [run]
    epsilon: float = 0.1
    eta: float = 1e-2
    a_exponent: float = 5.0
    sigma: float = 1.0
    T_horizon: float | None = None  # None: largest T with e^{-a eps T} >= 8h
    t_end: float | None = None  # None: run until the tracked point exits
    dt: float | None = None  # None: CFL-adaptive
    cfl: float = 0.5
    max_steps: int = 20000
    checkpoint_interval: int = 0  # 0 disables checkpoints
    sample_interval: int = 10
    snapshot_interval: int = 40
    workers: int = 1
    seed: int = 0
    output_dir: str = "runs"
    run_id: str = "reference"
    # [grid]
    n: int = 512
    radius: float = 2.0
    n_boundary: int = 256
    # [profile]
    blend_width: float | None = None
    # [suites]
    geometry_polygons: int = 1000
    geometry_curves: int = 100
    harmonic_fields: int = 50
    bs_samples: int = 100

    def __post_init__(self):
        self.validate()

    @property
    def spacing(self) -> float:
        return self.radius / self.n

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    def validate(self) -> None:
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ConfigError("epsilon must be a nonnegative number")
        if not 0.0 < self.eta < 1.0:
            raise ConfigError("eta must lie in (0, 1)")
        if not self.a_exponent > 1.0:
            raise ConfigError("a_exponent must exceed 1")
        if self.sigma != 1.0:
            raise ConfigError("sigma is fixed at 1; rescale time and velocity instead of changing it")
        if self.T_horizon is not None and not self.T_horizon >= 0.0:
            raise ConfigError("T_horizon must be nonnegative")
        if self.t_end is not None and not self.t_end >= 0.0:
            raise ConfigError("t_end must be nonnegative")
        if self.dt is not None and not self.dt > 0.0:
            raise ConfigError("dt must be positive")
        if not 0.0 < self.cfl <= 0.5:
            raise ConfigError("cfl must lie in (0, 0.5]")
        if self.n < 8:
            raise ConfigError("n must be at least 8")
        if self.radius != 2.0:
            raise ConfigError("the initial disk has radius 2")
        for name in ("max_steps", "sample_interval", "snapshot_interval", "workers", "n_boundary"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.checkpoint_interval < 0:
            raise ConfigError("checkpoint_interval must be nonnegative")
        if self.blend_width is not None and not self.blend_width > 0:
            raise ConfigError("blend_width must be positive")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


SECTIONS = {
    "run": ("epsilon", "eta", "a_exponent", "sigma", "T_horizon", "t_end", "dt", "cfl", "max_steps",
            "checkpoint_interval", "sample_interval", "snapshot_interval", "workers", "seed",
            "output_dir", "run_id"),
    "grid": ("n", "radius", "n_boundary"),
    "profile": ("blend_width",),
    "suites": ("geometry_polygons", "geometry_curves", "harmonic_fields", "bs_samples"),
}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, text: str):
    text = text.strip()
    kind = _TYPES[key]
    if "None" in kind and text.lower() in ("", "none", "auto"):
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r}") from exc
    return text


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file (``path`` or ``$CAPSSC_CONFIG``), then ``overrides``."""
    values: dict = {}
    path = path or os.environ.get(ENV_VAR)
    if path:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            for key, text in parser.items(section):
                if key not in SECTIONS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                values[key] = _convert(key, text)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, val) if isinstance(val, str) else val
    return RunConfig(**values)


def write_config(cfg: RunConfig, path) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for section, keys in SECTIONS.items():
        parser[section] = {k: "none" if getattr(cfg, k) is None else str(getattr(cfg, k)) for k in keys}
    buf = io.StringIO()
    parser.write(buf)
    atomic_write(path, buf.getvalue())
