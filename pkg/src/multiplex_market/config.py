"""Simulation configuration: defaults, validation and the key=value file format.

The file format is one ``key = value`` pair per line; blank lines and lines
starting with ``#`` are ignored. Keys are exactly the :class:`SimConfig`
field names.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError


@dataclass(frozen=True)
class SimConfig:
    # market size and composition
    side: int = 30
    fraction_fundamentalists: float = 0.25
    # initial prices
    p1_0: float = 500.0
    p2_0: float = 500.0
    # informative layer
    alpha: float = 0.95
    info_threshold: float = 1.0
    rewiring_prob: float = 0.1
    max_topplings: int = 1_000_000
    # fundamental values
    sigma_1f: float = 1.0
    sigma_2f: float = 1.0
    t_f: int = 10
    # expectations
    theta: float = 30.0
    # 1: fundamentalist offsets redrawn every step; 0: drawn once per agent
    theta_redraw: int = 1
    phi: float = 0.5
    T_max: int = 100
    kappa: float = 2.0
    sigma: float = 30.0
    tau: float = 15.0
    # endowments
    M0: float = 40000.0
    Q1_0: int = 200
    Q2_0: int = 200
    # trading layer
    delta: float = 0.0
    beta_ask: float = 3.0
    price_floor: float = 1.0
    # run control
    transient_steps: int = 5000
    record_steps: int = 10000
    seed: int = 0

    def __post_init__(self):
        bad = [key for key, ok in _checks(self) if not ok]
        if bad:
            raise ConfigError(
                "invalid configuration value(s): "
                + ", ".join(f"{k}={getattr(self, k)!r}" for k in bad),
                bad,
            )

    @property
    def n_agents(self) -> int:
        return self.side * self.side

    @property
    def n_fundamentalists(self) -> int:
        # small epsilon so that e.g. 0.29 * 100 counts 29, not 28
        return int(math.floor(self.fraction_fundamentalists * self.n_agents + 1e-9))

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _checks(c: SimConfig):
    yield "side", c.side >= 2
    yield "fraction_fundamentalists", 0.0 <= c.fraction_fundamentalists <= 1.0
    yield "p1_0", c.p1_0 > 0
    yield "p2_0", c.p2_0 > 0
    yield "alpha", 0.0 < c.alpha <= 1.0
    yield "info_threshold", c.info_threshold > 0
    yield "rewiring_prob", 0.0 <= c.rewiring_prob <= 1.0
    yield "max_topplings", c.max_topplings >= 1
    yield "sigma_1f", c.sigma_1f >= 0
    yield "sigma_2f", c.sigma_2f >= 0
    yield "t_f", c.t_f >= 1
    yield "theta", c.theta >= 0
    yield "theta_redraw", c.theta_redraw in (0, 1)
    yield "phi", c.phi >= 0
    yield "T_max", c.T_max >= 2
    yield "kappa", c.kappa >= 0
    yield "sigma", c.sigma >= 0
    yield "tau", c.tau >= 0
    yield "M0", c.M0 >= 0
    yield "Q1_0", c.Q1_0 >= 0
    yield "Q2_0", c.Q2_0 >= 0
    yield "delta", c.delta >= 0
    yield "beta_ask", c.beta_ask >= 0
    yield "price_floor", c.price_floor > 0
    yield "transient_steps", c.transient_steps >= 0
    yield "record_steps", c.record_steps >= 0
    yield "seed", c.seed >= 0


FIELD_TYPES: dict[str, type] = {f.name: {"int": int, "float": float}[f.type]
                                for f in fields(SimConfig)}


def coerce_value(key: str, value: Any) -> Any:
    """Convert ``value`` (usually a string) to the declared type of ``key``."""
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown configuration key: {key!r}", [key])
    kind = FIELD_TYPES[key]
    try:
        if kind is int:
            if isinstance(value, str):
                text = value.strip().replace("_", "")
                as_float = float(text)
                if not as_float.is_integer():
                    raise ValueError(text)
                return int(as_float)
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        out = float(value)
        if not math.isfinite(out):
            raise ValueError(value)
        return out
    except (TypeError, ValueError):
        raise ConfigError(
            f"type mismatch for {key!r}: expected {kind.__name__}, got {value!r}", [key]
        ) from None


def config_from_mapping(values: Mapping[str, Any], base: SimConfig | None = None) -> SimConfig:
    base = base or SimConfig()
    unknown = sorted(set(values) - set(FIELD_TYPES))
    if unknown:
        raise ConfigError("unknown configuration key(s): " + ", ".join(unknown), unknown)
    coerced = {k: coerce_value(k, v) for k, v in values.items()}
    return dataclasses.replace(base, **coerced)


def parse_config_text(text: str, source: str = "<string>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}", [key])
        values[key] = value
    return values


def parse_config(path: str | Path | None = None,
                 overrides: Mapping[str, Any] | None = None) -> SimConfig:
    """Build a :class:`SimConfig` from an optional file plus flag overrides.

    Overrides win over file values, which win over the built-in defaults.
    Unknown keys, type mismatches and out-of-range values raise
    :class:`ConfigError` naming the key.
    """
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    if overrides:
        values.update(overrides)
    return config_from_mapping(values)


def serialize_config(cfg: SimConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {value!r}")
    return "\n".join(lines) + "\n"
