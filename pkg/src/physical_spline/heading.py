"""Heading estimation with a pair of component splines.

The heading is represented by two splines on the same basis, one tracking
``cos(psi)`` and one ``sin(psi)``; the angle is recovered with ``atan2``.
This sidesteps the wrap-around at +-pi and keeps every cost quadratic.  The
magnitude of the pair is not constrained and is only required to stay away
from zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import TimeGrid, design_matrix
from .costs import NormalEquations, add_acceleration_regularization, check_times
from .errors import UndefinedHeadingError
from .measurements import FitConfig, Kind, as_arrays
from .model import _combine
from .solver import solve_stacked

logger = logging.getLogger(__name__)

MIN_MAGNITUDE = 1e-6
COS, SIN = 0, 1


@dataclass(frozen=True, eq=False)
class HeadingSpline:
    grid: TimeGrid
    cos_block: np.ndarray
    sin_block: np.ndarray

    def __post_init__(self):
        c = np.array(self.cos_block, dtype=float).reshape(-1)
        s = np.array(self.sin_block, dtype=float).reshape(-1)
        if c.size != self.grid.n_basis or s.size != self.grid.n_basis:
            raise ValueError("heading blocks do not match the grid")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(s))):
            raise ValueError("heading weights must be finite")
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "cos_block", c)
        object.__setattr__(self, "sin_block", s)

    def components(self, times, order: int = 0):
        """``(f_cos, f_sin)`` (or their derivatives) at ``times``."""
        F = design_matrix(self.grid, times, order)
        return _combine(F, self.cos_block), _combine(F, self.sin_block)

    def reconstruct(self, times, strict: bool = True):
        """Heading in (-pi, pi] at ``times``.

        With ``strict`` an UndefinedHeadingError is raised where the
        component magnitude is below MIN_MAGNITUDE; otherwise NaN is returned
        there.
        """
        scalar = np.ndim(times) == 0
        fc, fs = self.components(np.atleast_1d(times))
        psi = np.arctan2(fs, fc)
        weak = np.hypot(fc, fs) <= MIN_MAGNITUDE
        if weak.any():
            if strict:
                t = np.atleast_1d(times)[weak]
                raise UndefinedHeadingError(f"heading undefined at t={t[:5].tolist()}")
            psi = np.where(weak, np.nan, psi)
        return float(psi[0]) if scalar else psi

    def extended(self, extra_knots: int) -> "HeadingSpline":
        pad = np.zeros(extra_knots)
        return HeadingSpline(
            self.grid.extended(extra_knots),
            np.concatenate([self.cos_block, pad]),
            np.concatenate([self.sin_block, pad]),
        )

    def __eq__(self, other):
        if not isinstance(other, HeadingSpline):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.cos_block, other.cos_block)
            and np.array_equal(self.sin_block, other.sin_block)
        )


def reconstruct_heading(hs: HeadingSpline, t: float) -> float:
    return hs.reconstruct(t, strict=True)


def add_heading_measurement_cost(ne: NormalEquations, grid: TimeGrid, meas, scale: float = 1.0) -> None:
    """Fit ``f_cos(t_j)`` to ``cos(psi_j)`` and ``f_sin(t_j)`` to ``sin(psi_j)``."""
    meas = list(meas)
    if not meas:
        return
    if any(m.kind is not Kind.HEADING for m in meas):
        raise ValueError("heading measurement cost needs heading measurements")
    t, psi, c = as_arrays(meas)
    check_times(grid, t)
    F = design_matrix(grid, t, 0)
    ne.add_rows(F, scale * c, np.cos(psi), axis=COS)
    ne.add_rows(F, scale * c, np.sin(psi), axis=SIN)


def _samples(samples, width: int) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        return np.zeros((0, width))
    arr = arr.reshape(-1, width)
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite")
    return arr


def add_velocity_heading_cost(ne: NormalEquations, grid: TimeGrid, vel_samples, c: float = 1.0) -> None:
    """Residual ``vx f_sin(t) - vy f_cos(t)``: heading parallel to velocity.

    ``vel_samples`` is an array of ``(t, vx, vy)`` rows.
    """
    s = _samples(vel_samples, 3)
    if s.shape[0] == 0 or c == 0.0:
        return
    check_times(grid, s[:, 0])
    F = design_matrix(grid, s[:, 0], 0)
    rows = np.hstack([-s[:, 2:3] * F, s[:, 1:2] * F])
    ne.add_rows(rows, np.full(s.shape[0], float(c)))


def add_acceleration_heading_cost(
    ne: NormalEquations,
    grid: TimeGrid,
    acc_samples,
    c: float = 1.0,
    v_min: float = 0.1,
) -> int:
    """Match ``d/dt(f_cos v) = ax`` and ``d/dt(f_sin v) = ay``.

    ``acc_samples`` rows are ``(t, ax, ay, v, v_dot)``.  Samples with
    ``v <= v_min`` are skipped; the number skipped is returned.
    """
    s = _samples(acc_samples, 5)
    if s.shape[0] == 0 or c == 0.0:
        return 0
    keep = s[:, 3] > v_min
    skipped = int((~keep).sum())
    if skipped:
        logger.debug("skipped %d acceleration samples below v_min=%g", skipped, v_min)
    s = s[keep]
    if s.shape[0] == 0:
        return skipped
    check_times(grid, s[:, 0])
    rows = s[:, 3:4] * design_matrix(grid, s[:, 0], 1) + s[:, 4:5] * design_matrix(grid, s[:, 0], 0)
    weights = np.full(s.shape[0], float(c))
    ne.add_rows(rows, weights, s[:, 1], axis=COS)
    ne.add_rows(rows, weights, s[:, 2], axis=SIN)
    return skipped


def kinematic_samples(spline, times):
    """Velocity and acceleration samples of a Cartesian spline for the heading fit.

    Returns ``(vel, acc)`` with rows ``(t, vx, vy)`` and ``(t, ax, ay, v, v_dot)``;
    ``v_dot`` is set to 0 where the speed vanishes (those rows are skipped
    downstream anyway).
    """
    s = spline.sample(times)
    v = np.hypot(s["vx"], s["vy"])
    safe_v = np.where(v > 0.0, v, 1.0)
    v_dot = np.where(v > 0.0, (s["vx"] * s["ax"] + s["vy"] * s["ay"]) / safe_v, 0.0)
    vel = np.column_stack([s["t"], s["vx"], s["vy"]])
    acc = np.column_stack([s["t"], s["ax"], s["ay"], v, v_dot])
    return vel, acc


def fit_heading(
    meas,
    vel_samples=None,
    acc_samples=None,
    config: Optional[FitConfig] = None,
    grid: Optional[TimeGrid] = None,
) -> HeadingSpline:
    """Fit the cos/sin component splines.

    Parameters
    ----------
    meas : iterable of Measurement
        Heading measurements are used; other kinds are ignored.
    vel_samples, acc_samples : array_like, optional
        See :func:`add_velocity_heading_cost` and
        :func:`add_acceleration_heading_cost`.
    config : FitConfig, optional
        Supplies ``c_heading``, ``c_heading_vel``, ``c_heading_acc``,
        ``v_min``, ``lambda_acc_reg`` and (without ``grid``) ``grid_dt``.
    grid : TimeGrid, optional
        Defaults to a uniform grid spanning all inputs.

    Without any heading measurement the direction of each velocity sample
    faster than ``v_min`` is used as a heading target as well; the velocity
    residual alone is minimised by the all-zero (undefined) heading.
    """
    config = config or FitConfig()
    heads = [m for m in meas if m.kind is Kind.HEADING]
    vel = _samples(vel_samples if vel_samples is not None else [], 3)
    acc = _samples(acc_samples if acc_samples is not None else [], 5)
    moving = np.hypot(vel[:, 1], vel[:, 2]) > config.v_min
    if not heads and not moving.any():
        raise ValueError("heading fit needs heading measurements or non-degenerate velocity samples")

    if grid is None:
        t_all = [m.t for m in heads] + vel[:, 0].tolist() + acc[:, 0].tolist()
        grid = TimeGrid.uniform(max(t_all), config.grid_dt)
    ne = NormalEquations.for_grid(grid)

    if heads:
        add_heading_measurement_cost(ne, grid, heads, config.c_heading)
    else:
        t = vel[moving, 0]
        psi = np.arctan2(vel[moving, 2], vel[moving, 1])
        F = design_matrix(grid, t, 0)
        w = np.full(t.size, config.c_heading)
        ne.add_rows(F, w, np.cos(psi), axis=COS)
        ne.add_rows(F, w, np.sin(psi), axis=SIN)
    add_velocity_heading_cost(ne, grid, vel, config.c_heading_vel)
    add_acceleration_heading_cost(ne, grid, acc, config.c_heading_acc, config.v_min)
    add_acceleration_regularization(ne, grid, config.lambda_acc_reg)
    ne.symmetrize()

    w = solve_stacked(ne.Q, ne.b)
    n = grid.n_basis
    return HeadingSpline(grid, w[:n], w[n:])
