"""Fitted physical spline and kinematic state evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Optional

import numpy as np

from .basis import TimeGrid, design_matrix

if TYPE_CHECKING:
    from .heading import HeadingSpline

SPEED_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Per-axis weights: ``(p0, v0, a_0, a_1, ..., a_{K-1})``."""

    x_block: np.ndarray
    y_block: np.ndarray

    def __post_init__(self):
        x = np.array(self.x_block, dtype=float).reshape(-1)
        y = np.array(self.y_block, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValueError(f"x and y blocks differ in length ({x.size} vs {y.size})")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("weights must be finite")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x_block", x)
        object.__setattr__(self, "y_block", y)

    @classmethod
    def from_stacked(cls, w) -> "WeightVector":
        w = np.asarray(w, dtype=float).reshape(-1)
        if w.size % 2:
            raise ValueError("stacked weight vector must have even length")
        n = w.size // 2
        return cls(w[:n], w[n:])

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x_block, self.y_block])

    def __len__(self):
        return self.x_block.size

    def __add__(self, other: "WeightVector") -> "WeightVector":
        return WeightVector(self.x_block + other.x_block, self.y_block + other.y_block)


@dataclass(frozen=True)
class KinematicState:
    t: float
    x: float
    y: float
    vx: float
    vy: float
    ax: float
    ay: float
    heading: Optional[float] = None  # from a fitted heading model, if any

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    @property
    def course(self) -> Optional[float]:
        """Direction of travel, or None when (nearly) standing still."""
        if self.speed < SPEED_EPS:
            return None
        return math.atan2(self.vy, self.vx)

    @property
    def psi(self) -> Optional[float]:
        return self.heading if self.heading is not None else self.course


def _combine(basis: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Trailing zero weights are skipped so that appending zero weights
    # (extend_constant_velocity) reproduces the exact same arithmetic.
    nz = np.flatnonzero(w)
    if nz.size == 0:
        return np.zeros(basis.shape[0])
    n = nz[-1] + 1
    return basis[:, :n] @ w[:n]


@dataclass(frozen=True)
class PhysicalSpline:
    """A fitted trajectory.

    Times passed to :meth:`evaluate` are model times, i.e. seconds since the
    first measurement; add ``t_offset`` to get back to the recording clock.
    """

    grid: TimeGrid
    weights: WeightVector
    t_offset: float = 0.0
    heading_model: Optional["HeadingSpline"] = None
    config: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.weights) != self.grid.n_basis:
            raise ValueError(
                f"weights have {len(self.weights)} entries per axis, "
                f"grid needs {self.grid.n_basis}"
            )
        if not math.isfinite(self.t_offset):
            raise ValueError("t_offset must be finite")

    def sample(self, times) -> dict:
        """Vectorised evaluation; returns a dict of equally long arrays."""
        t = np.asarray(times, dtype=float).reshape(-1)
        out = {"t": t}
        for order, (kx, ky) in enumerate((("x", "y"), ("vx", "vy"), ("ax", "ay"))):
            basis = design_matrix(self.grid, t, order)
            out[kx] = _combine(basis, self.weights.x_block)
            out[ky] = _combine(basis, self.weights.y_block)
        if self.heading_model is not None:
            out["heading"] = self.heading_model.reconstruct(t, strict=False)
        return out

    def evaluate(self, t: float) -> KinematicState:
        return evaluate(self, t)

    def evaluate_batch(self, times) -> list[KinematicState]:
        return evaluate_batch(self, times)


def _states_from_sample(s: dict) -> list[KinematicState]:
    heading = s.get("heading")
    states = []
    for i in range(s["t"].size):
        h = None
        if heading is not None and np.isfinite(heading[i]):
            h = float(heading[i])
        states.append(
            KinematicState(
                float(s["t"][i]),
                float(s["x"][i]), float(s["y"][i]),
                float(s["vx"][i]), float(s["vy"][i]),
                float(s["ax"][i]), float(s["ay"][i]),
                h,
            )
        )
    return states


def evaluate(spline: PhysicalSpline, t: float) -> KinematicState:
    """Full kinematic state of ``spline`` at model time ``t``."""
    return _states_from_sample(spline.sample([t]))[0]


def evaluate_batch(spline: PhysicalSpline, times) -> list[KinematicState]:
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size == 0:
        return []
    return _states_from_sample(spline.sample(times))


def extend_constant_velocity(spline: PhysicalSpline, extra_knots: int) -> PhysicalSpline:
    """Append ``extra_knots`` uniform knots with zero acceleration weight.

    The acceleration ramps down to zero over the first new interval and the
    object then coasts at constant velocity.  Everything up to the old last
    knot is left untouched.
    """
    grid = spline.grid.extended(extra_knots)
    pad = np.zeros(extra_knots)
    weights = WeightVector(
        np.concatenate([spline.weights.x_block, pad]),
        np.concatenate([spline.weights.y_block, pad]),
    )
    heading = spline.heading_model
    if heading is not None:
        heading = heading.extended(extra_knots)
    return replace(spline, grid=grid, weights=weights, heading_model=heading)
