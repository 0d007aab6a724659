"""Measurement containers and fit configuration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Iterable, Optional

import numpy as np


class Kind(str, Enum):
    POSITION = "position"
    VELOCITY = "velocity"
    ACCELERATION = "acceleration"
    HEADING = "heading"
    LONLAT_POSITION = "lonlat_position"


POSITION_KINDS = (Kind.POSITION, Kind.LONLAT_POSITION)


def wrap_angle(psi):
    """Wrap angles to (-pi, pi]."""
    out = np.mod(np.asarray(psi, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Measurement:
    """One observation at model time ``t``.

    ``value`` is an ``(x, y)`` pair for position-like kinds and a scalar
    angle in radians for headings.  Lon/lat measurements carry the heading
    used for the rotation plus separate along- and cross-track weights.
    """

    t: float
    kind: Kind
    value: object
    c: float = 1.0
    psi_ref: Optional[float] = None
    c_lon: float = 1.0
    c_lat: float = 1.0

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not math.isfinite(self.t):
            raise ValueError("measurement time must be finite")
        for name in ("c", "c_lon", "c_lat"):
            c = getattr(self, name)
            if not (math.isfinite(c) and c >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {c!r}")
        if kind is Kind.HEADING:
            v = float(self.value)
            if not math.isfinite(v):
                raise ValueError("heading must be finite")
            object.__setattr__(self, "value", v)
        else:
            v = tuple(float(a) for a in self.value)
            if len(v) != 2 or not all(math.isfinite(a) for a in v):
                raise ValueError(f"{kind.value} measurement needs a finite (x, y) pair")
            object.__setattr__(self, "value", v)
        if kind is Kind.LONLAT_POSITION:
            if self.psi_ref is None or not math.isfinite(self.psi_ref):
                raise ValueError("lonlat_position measurement needs a finite psi_ref")

    def shifted(self, dt: float) -> "Measurement":
        return Measurement(self.t - dt, self.kind, self.value, self.c,
                           self.psi_ref, self.c_lon, self.c_lat)


@dataclass(frozen=True)
class MeasurementSet:
    """Time-sorted measurements, already shifted so the track starts at 0."""

    measurements: tuple
    t_offset: float = 0.0

    def __post_init__(self):
        ms = tuple(sorted(self.measurements, key=lambda m: m.t))
        object.__setattr__(self, "measurements", ms)

    @classmethod
    def from_absolute(cls, measurements: Iterable[Measurement]) -> "MeasurementSet":
        """Shift absolute-time measurements so the earliest one is at t=0."""
        ms = list(measurements)
        if not ms:
            return cls((), 0.0)
        t0 = min(m.t for m in ms)
        return cls(tuple(m.shifted(t0) for m in ms), t0)

    def __len__(self):
        return len(self.measurements)

    def __iter__(self):
        return iter(self.measurements)

    def of_kind(self, *kinds: Kind) -> list[Measurement]:
        kinds = tuple(Kind(k) for k in kinds)
        return [m for m in self.measurements if m.kind in kinds]

    def has(self, *kinds: Kind) -> bool:
        kinds = tuple(Kind(k) for k in kinds)
        return any(m.kind in kinds for m in self.measurements)

    @property
    def t_last(self) -> float:
        return max((m.t for m in self.measurements), default=0.0)


def as_arrays(meas: Iterable[Measurement]):
    """Split a list of same-kind measurements into ``(t, values, c)`` arrays."""
    meas = list(meas)
    t = np.array([m.t for m in meas], dtype=float)
    c = np.array([m.c for m in meas], dtype=float)
    if meas and meas[0].kind is Kind.HEADING:
        values = np.array([m.value for m in meas], dtype=float)
    else:
        values = np.array([m.value for m in meas], dtype=float).reshape(-1, 2)
    return t, values, c


@dataclass
class FitConfig:
    """Global multipliers and switches for one fit.

    Per-measurement weights are multiplied by the family multiplier, so
    ``c_lon = c_lat / 1000`` de-emphasises along-track position errors.
    """

    grid_dt: float = 0.5
    c_pos: float = 1.0
    c_vel: float = 1.0
    c_acc: float = 1.0
    c_lon: float = 1.0
    c_lat: float = 1.0
    c_heading_dir: float = 0.0
    lambda_acc_reg: float = 1e-6
    c_zero_vel: float = 0.0
    v_stop: float = 0.1
    T_stop: float = 1.0
    use_lonlat_split: bool = False
    use_heading_dir: bool = True
    # heading fit
    c_heading: float = 1.0
    c_heading_vel: float = 1.0
    c_heading_acc: float = 0.0
    v_min: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type in ("bool", bool):
                continue
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{f.name} must be finite and >= 0, got {v!r}")
        if self.grid_dt <= 0.0:
            raise ValueError("grid_dt must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in d.items():
            name = "lambda_acc_reg" if key in ("λ_acc_reg", "lambda") else key
            if name not in known:
                raise ValueError(f"unknown config key {key!r}")
            if known[name].type in ("bool", bool):
                if isinstance(value, str):
                    low = value.strip().lower()
                    if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                        raise ValueError(f"config key {key!r} expects a boolean, got {value!r}")
                    value = low in ("true", "1", "yes", "on")
                kwargs[name] = bool(value)
            else:
                try:
                    kwargs[name] = float(value)
                except (TypeError, ValueError):
                    raise ValueError(f"config key {key!r} expects a number, got {value!r}") from None
        return cls(**kwargs)
