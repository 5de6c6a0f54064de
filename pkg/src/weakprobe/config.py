"""Flat ``key = value`` experiment configuration with per-experiment defaults."""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

EXPERIMENTS = ("fig2", "fig3", "tomo", "traj")

_PI_EXPR = re.compile(r"^\s*(?P<num>[-+]?[0-9.]*(?:e[-+]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(?P<den>[0-9.]+))?\s*$", re.I)
_LIST_SPLIT = re.compile(r",(?![^()]*\))")


def parse_angle(text: str) -> float:
    """Float, or a multiple of pi such as ``pi/4`` or ``0.5*pi``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_EXPR.match(text)
    if not m:
        raise ConfigError(f"cannot parse angle {text!r}")
    num = m.group("num")
    coef = 1.0 if num in ("", "+") else -1.0 if num == "-" else float(num)
    den = float(m.group("den")) if m.group("den") else 1.0
    return coef * math.pi / den


def split_list(text: str) -> list[str]:
    return [part.strip() for part in _LIST_SPLIT.split(text) if part.strip()]


def parse_state(text: str):
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        parts = [p for p in text[1:-1].split(",")]
        if len(parts) != 3:
            raise ConfigError(f"explicit state needs (r, theta, phi), got {text!r}")
        r, theta, phi = float(parts[0]), parse_angle(parts[1]), parse_angle(parts[2])
        if not 0.0 <= r <= 1.0:
            raise ConfigError(f"Bloch length must lie in [0, 1], got {r}")
        return (r, theta, phi)
    if text not in {"L", "R", "ground", "excited", "0", "1", "+x", "-x", "+y", "-y", "+z", "-z"}:
        raise ConfigError(f"unknown initial state {text!r}")
    return text


def state_label(spec) -> str:
    if isinstance(spec, str):
        return spec
    return "r{:g}_t{:.4f}_p{:.4f}".format(*spec)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    g: tuple = ()
    beta: tuple = ()
    init: tuple = ()
    n_runs: int = 0
    duration: float = 10.0
    duration_min: float = 0.5
    duration_max: float = 20.0
    n_durations: int = 20
    E: float = 1.0
    delta_t: float = 0.01
    sigma: float = 1.0
    delta_I: float | None = None
    bin_range_sigmas: float = 6.0
    master_seed: int = 20090301
    output: str = "weakprobe_out"
    workers: int = 1

    # keys that never enter output headers: they must not change data payloads
    RUNTIME_ONLY = ("output", "workers")

    def validate(self) -> ExperimentConfig:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.g or any(not x > 0 for x in self.g):
            raise ConfigError("g values must be positive")
        if not self.beta or any(not 0.0 <= b <= math.pi / 2 + 1e-12 for b in self.beta):
            raise ConfigError("beta values must lie in [0, pi/2]")
        if not self.init:
            raise ConfigError("at least one initial state is required")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        for name in ("duration", "duration_min", "duration_max", "E", "delta_t", "sigma", "bin_range_sigmas"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.delta_I is not None and not self.delta_I > 0:
            raise ConfigError("delta_I must be positive")
        if self.duration_max < self.duration_min or self.n_durations < 1:
            raise ConfigError("duration grid is empty")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.experiment == "traj" and (len(self.g) > 1 or len(self.beta) > 1 or len(self.init) > 1):
            raise ConfigError("traj takes a single g, beta and init")
        return self

    def durations(self) -> list[float]:
        if self.n_durations == 1:
            return [self.duration_max]
        step = (self.duration_max - self.duration_min) / (self.n_durations - 1)
        return [self.duration_min + i * step for i in range(self.n_durations)]

    def snapshot(self) -> dict:
        """Parameters that determine the data, in a stable order."""
        out = {}
        for f in fields(self):
            if f.name in self.RUNTIME_ONLY:
                continue
            out[f.name] = getattr(self, f.name)
        return out


DEFAULTS = {
    "fig2": dict(g="0.01,0.2,5", beta="pi/4", init="L,ground", n_runs="200", duration="10"),
    "fig3": dict(g="5", beta="0,pi/4,pi/2", init="L", n_runs="500"),
    "tomo": dict(g="5", beta="pi/4", init="ground,L,+x", n_runs="1000", duration="10"),
    "traj": dict(g="5", beta="pi/4", init="L", n_runs="1", duration="10"),
}

_CONVERTERS = {
    "g": lambda s: tuple(float(x) for x in split_list(s)),
    "beta": lambda s: tuple(parse_angle(x) for x in split_list(s)),
    "init": lambda s: tuple(parse_state(x) for x in split_list(s)),
    "n_runs": int,
    "duration": float,
    "duration_min": float,
    "duration_max": float,
    "n_durations": int,
    "E": float,
    "delta_t": float,
    "sigma": float,
    "delta_I": lambda s: None if s.strip().lower() in ("", "none", "auto") else float(s),
    "bin_range_sigmas": float,
    "master_seed": int,
    "output": str,
    "workers": int,
}

KEYS = tuple(_CONVERTERS)


def read_config_file(path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = line.split("=", 1)
        elif ":" in line:
            key, value = line.split(":", 1)
        else:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip().replace("-", "_")
        if key == "experiment":
            continue
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def build_config(experiment: str, file_values: dict | None = None, overrides: dict | None = None,
                 default_workers: int = 1) -> ExperimentConfig:
    """Merge defaults, config-file values and command-line overrides (in that order)."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    raw = dict(DEFAULTS[experiment])
    raw.update(file_values or {})
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kwargs = {"workers": default_workers}
    for key, text in raw.items():
        try:
            kwargs[key] = _CONVERTERS[key](str(text))
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None
    return ExperimentConfig(experiment=experiment, **kwargs).validate()
