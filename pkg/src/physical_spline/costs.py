"""Normal-equation assembly for the physical spline fit.

Every cost family is a weighted sum of squared linear residuals
``r_i(w) = q_i . w - target_i``.  With ``q = 1/2 sum c_i r_i^2`` the
gradient is ``Q w - b`` with ``Q = sum c_i q_i q_i^T`` and
``b = sum c_i target_i q_i``.  Families only ever add to ``Q`` and ``b``.

The dyadic sums are formed as ``F^T diag(c) F`` from a design matrix ``F``
whose rows are the ``q_i``, which is the same sum computed as one matrix
product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .basis import TimeGrid, design_matrix
from .errors import MeasurementRangeError, UnanchoredProblemError
from .measurements import (
    POSITION_KINDS,
    FitConfig,
    Kind,
    Measurement,
    MeasurementSet,
    as_arrays,
    wrap_angle,
)

logger = logging.getLogger(__name__)

# relative slack when checking that measurement times fall inside the grid
_RANGE_TOL = 1e-9
# Gram products up to this many multiply-adds accumulate in extended
# precision.  Q in the weight coordinates has condition numbers ~1e7-1e8, so
# rounding in the accumulation alone can cost ~1e-8 in the solution.
EXTENDED_PRECISION_BUDGET = 2e7


@dataclass
class NormalEquations:
    """Accumulator for ``Q w = b`` over two stacked blocks of ``n_basis`` weights.

    For trajectories the blocks are x and y; for heading fits they are the
    cosine and sine component splines.
    """

    n_basis: int
    Q: np.ndarray = None
    b: np.ndarray = None
    grid: Optional[TimeGrid] = None

    def __post_init__(self):
        n = 2 * self.n_basis
        if self.Q is None:
            self.Q = np.zeros((n, n))
        if self.b is None:
            self.b = np.zeros(n)
        if self.Q.shape != (n, n) or self.b.shape != (n,):
            raise ValueError("Q/b shape does not match n_basis")

    @classmethod
    def for_grid(cls, grid: TimeGrid) -> "NormalEquations":
        return cls(grid.n_basis, grid=grid)

    @property
    def dim(self) -> int:
        return 2 * self.n_basis

    def block(self, axis: int) -> slice:
        return slice(axis * self.n_basis, (axis + 1) * self.n_basis)

    def add_rows(self, rows: np.ndarray, c: np.ndarray, target=None, axis: Optional[int] = None):
        """Add ``sum_i c_i q_i q_i^T`` and ``sum_i c_i target_i q_i``.

        ``rows`` holds one ``q_i`` per row, either full width or (with
        ``axis``) restricted to one block.
        """
        rows = np.asarray(rows, dtype=float)
        c = np.asarray(c, dtype=float)
        if rows.shape[0] == 0:
            return
        sl = slice(None) if axis is None else self.block(axis)
        m, k = rows.shape
        if m * k * k <= EXTENDED_PRECISION_BUDGET:
            rows = rows.astype(np.longdouble)
            c = c.astype(np.longdouble)
        weighted = rows * c[:, None]
        self.Q[sl, sl] += (rows.T @ weighted).astype(float)
        if target is not None:
            target = np.asarray(target, dtype=rows.dtype)
            self.b[sl] += (weighted.T @ target).astype(float)

    def symmetrize(self) -> "NormalEquations":
        self.Q = 0.5 * (self.Q + self.Q.T)
        return self

    def copy(self) -> "NormalEquations":
        return NormalEquations(self.n_basis, self.Q.copy(), self.b.copy(), self.grid)


def check_times(grid: TimeGrid, t: np.ndarray) -> None:
    """Reject measurement times outside ``[0, grid.t_end]``."""
    tol = _RANGE_TOL * max(1.0, grid.t_end)
    bad = t[(t < -tol) | (t > grid.t_end + tol)]
    if bad.size:
        shown = ", ".join(f"{v:.6g}" for v in bad[:10])
        more = f" (+{bad.size - 10} more)" if bad.size > 10 else ""
        raise MeasurementRangeError(
            f"{bad.size} measurement(s) outside grid span [0, {grid.t_end:g}]: {shown}{more}"
        )


def _require_kind(meas: Sequence[Measurement], *kinds: Kind) -> None:
    for m in meas:
        if m.kind not in kinds:
            raise ValueError(f"expected {'/'.join(k.value for k in kinds)} measurement, got {m.kind.value}")


def _add_xy_cost(ne, grid, meas, order, kind, scale):
    meas = list(meas)
    _require_kind(meas, kind)
    if not meas:
        return
    t, values, c = as_arrays(meas)
    check_times(grid, t)
    F = design_matrix(grid, t, order)
    c = scale * c
    ne.add_rows(F, c, values[:, 0], axis=0)
    ne.add_rows(F, c, values[:, 1], axis=1)


def add_position_cost(ne: NormalEquations, grid: TimeGrid, meas, scale: float = 1.0) -> None:
    """L2 fit of x(t_i), y(t_i) to measured positions; x and y decouple."""
    _add_xy_cost(ne, grid, meas, 0, Kind.POSITION, scale)


def add_velocity_cost(ne: NormalEquations, grid: TimeGrid, meas, scale: float = 1.0) -> None:
    _add_xy_cost(ne, grid, meas, 1, Kind.VELOCITY, scale)


def add_acceleration_cost(ne: NormalEquations, grid: TimeGrid, meas, scale: float = 1.0) -> None:
    _add_xy_cost(ne, grid, meas, 2, Kind.ACCELERATION, scale)


def add_lonlat_position_cost(
    ne: NormalEquations,
    grid: TimeGrid,
    meas,
    scale_lon: float = 1.0,
    scale_lat: float = 1.0,
) -> None:
    """Position fit with separate along-track and cross-track weights.

    Residuals are rotated into the frame given by each measurement's
    ``psi_ref``: the longitudinal error is ``cos(psi) ex + sin(psi) ey`` and
    the lateral error ``-sin(psi) ex + cos(psi) ey``.  Unlike the plain
    position cost this couples the x and y blocks.
    """
    meas = list(meas)
    _require_kind(meas, Kind.LONLAT_POSITION)
    if not meas:
        return
    t, values, c = as_arrays(meas)
    check_times(grid, t)
    psi = np.array([m.psi_ref for m in meas], dtype=float)
    c_lon = np.array([m.c_lon for m in meas]) * c * scale_lon
    c_lat = np.array([m.c_lat for m in meas]) * c * scale_lat
    cos, sin = np.cos(psi), np.sin(psi)
    F = design_matrix(grid, t, 0)

    rows_lon = np.hstack([cos[:, None] * F, sin[:, None] * F])
    ne.add_rows(rows_lon, c_lon, cos * values[:, 0] + sin * values[:, 1])
    rows_lat = np.hstack([-sin[:, None] * F, cos[:, None] * F])
    ne.add_rows(rows_lat, c_lat, -sin * values[:, 0] + cos * values[:, 1])


def heading_direction_rows(F1: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Rows ``q`` of the velocity-along-heading residual.

    Uses ``tan(psi) vx - vy`` where ``|tan| <= |cot|`` and ``-vx + cot(psi) vy``
    elsewhere; the tie goes to the tan form.
    """
    psi = wrap_angle(psi)
    sin, cos = np.sin(psi), np.cos(psi)
    use_tan = np.abs(sin) <= np.abs(cos)
    safe_cos = np.where(use_tan, cos, 1.0)
    safe_sin = np.where(use_tan, 1.0, sin)
    coef_x = np.where(use_tan, sin / safe_cos, -1.0)
    coef_y = np.where(use_tan, -1.0, cos / safe_sin)
    return np.hstack([coef_x[:, None] * F1, coef_y[:, None] * F1])


def add_heading_direction_cost(ne: NormalEquations, grid: TimeGrid, meas, scale: float = 1.0) -> None:
    """Penalise velocity components perpendicular to the measured heading."""
    meas = list(meas)
    _require_kind(meas, Kind.HEADING)
    if not meas:
        return
    t, psi, c = as_arrays(meas)
    check_times(grid, t)
    rows = heading_direction_rows(design_matrix(grid, t, 1), psi)
    ne.add_rows(rows, scale * c)


def _window_speed(t: np.ndarray, p: np.ndarray, half: float) -> np.ndarray:
    # near the ends the window is shifted inwards rather than shortened
    width = min(2.0 * half, t[-1] - t[0])
    lo = np.clip(t - half, t[0], t[-1] - width)
    hi = lo + width
    dx = np.interp(hi, t, p[:, 0]) - np.interp(lo, t, p[:, 0])
    dy = np.interp(hi, t, p[:, 1]) - np.interp(lo, t, p[:, 1])
    span = np.maximum(hi - lo, 1e-12)
    return np.hypot(dx, dy) / span


def _runs(mask: np.ndarray):
    """Start/stop index pairs (inclusive) of consecutive True entries."""
    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    return list(zip(starts, stops))


def detect_standstill(meas: MeasurementSet, v_stop: float, T_stop: float) -> list:
    """Find maximal intervals of at least ``T_stop`` seconds below ``v_stop``.

    Speed comes from velocity measurements when there are any.  Otherwise
    it is the displacement over a centred window of ``T_stop`` seconds of
    linearly interpolated positions; that estimate lags a stop by half a
    window on each side, so detected runs are widened by the same amount.
    """
    vel = [m for m in meas if m.kind is Kind.VELOCITY]
    if vel:
        t, v, _ = as_arrays(vel)
        t, idx = np.unique(t, return_index=True)
        speed = np.hypot(v[idx, 0], v[idx, 1])
        widen = 0.0
    else:
        pos = [m for m in meas if m.kind in POSITION_KINDS]
        if len(pos) < 3:
            return []
        t, p, _ = as_arrays(pos)
        t, idx = np.unique(t, return_index=True)
        if t.size < 3:
            return []
        half = 0.5 * T_stop
        speed = _window_speed(t, p[idx], half)
        widen = half

    intervals = []
    for i0, i1 in _runs(speed < v_stop):
        a = max(t[0], t[i0] - widen)
        b = min(t[-1], t[i1] + widen)
        if b - a >= T_stop:
            intervals.append((float(a), float(b)))
    # widening can make neighbouring runs overlap
    merged = []
    for a, b in intervals:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def add_zero_velocity_regularization(ne: NormalEquations, grid: TimeGrid, standstill_intervals, c: float) -> None:
    """Penalise ``v(t_k)^2`` at every knot inside a standstill interval."""
    if c == 0.0 or not standstill_intervals:
        return
    knots = grid.knots
    inside = np.zeros(knots.size, dtype=bool)
    for a, b in standstill_intervals:
        inside |= (knots >= a) & (knots <= b)
    if not inside.any():
        return
    F1 = design_matrix(grid, knots[inside], 1)
    weights = np.full(F1.shape[0], float(c))
    ne.add_rows(F1, weights, axis=0)
    ne.add_rows(F1, weights, axis=1)


def add_acceleration_regularization(ne: NormalEquations, grid: TimeGrid, lam: float) -> None:
    """Ridge penalty ``lam/2 * sum a_k^2`` on the per-knot acceleration weights."""
    if lam < 0.0:
        raise ValueError("regularization weight must be >= 0")
    if lam == 0.0:
        return
    n = ne.n_basis
    for axis in (0, 1):
        idx = np.arange(axis * n + 2, (axis + 1) * n)
        ne.Q[idx, idx] += lam


def raw_heading_interpolator(meas: MeasurementSet):
    """Linear interpolation of unwrapped heading measurements, or None."""
    heads = [m for m in meas if m.kind is Kind.HEADING]
    if not heads:
        return None
    t, psi, _ = as_arrays(heads)
    t, idx = np.unique(t, return_index=True)
    psi = np.unwrap(psi[idx])

    def interp(times):
        return wrap_angle(np.interp(np.asarray(times, dtype=float), t, psi))

    return interp


def to_lonlat(meas, heading_at) -> list[Measurement]:
    """Attach a reference heading to plain position measurements."""
    meas = list(meas)
    if not meas:
        return []
    psi = np.atleast_1d(heading_at(np.array([m.t for m in meas])))
    return [
        Measurement(m.t, Kind.LONLAT_POSITION, m.value, m.c, float(p), 1.0, 1.0)
        for m, p in zip(meas, psi)
    ]


def assemble(
    meas: MeasurementSet,
    config: FitConfig,
    grid: Optional[TimeGrid] = None,
    heading_model=None,
    heading_meas: Optional[Sequence[Measurement]] = None,
) -> NormalEquations:
    """Build the normal equations of every enabled cost family.

    Parameters
    ----------
    meas : MeasurementSet
        Shifted measurements.
    config : FitConfig
        Family multipliers and switches.
    grid : TimeGrid, optional
        Defaults to a uniform grid of ``config.grid_dt`` covering the track.
    heading_model : HeadingSpline, optional
        Fitted heading; used for the lon/lat split of positions that carry
        no explicit reference heading.
    heading_meas : sequence of Measurement, optional
        Heading samples for the heading-direction cost; defaults to the
        heading measurements in ``meas``.

    Returns
    -------
    NormalEquations
        Symmetric ``Q`` and ``b``; ``ne.grid`` is the grid that was used.
    """
    if not meas.has(*POSITION_KINDS):
        raise UnanchoredProblemError(
            "no position measurements: initial position is unobservable; "
            "add at least one position sample"
        )
    if grid is None:
        grid = TimeGrid.uniform(meas.t_last, config.grid_dt)
    ne = NormalEquations.for_grid(grid)

    positions = meas.of_kind(Kind.POSITION)
    lonlat = meas.of_kind(Kind.LONLAT_POSITION)
    if config.use_lonlat_split and positions:
        if heading_model is not None:
            source = lambda t: heading_model.reconstruct(t)  # noqa: E731
        else:
            source = raw_heading_interpolator(meas)
        if source is None:
            raise ValueError("lon/lat split requested but no heading source is available")
        lonlat = lonlat + to_lonlat(positions, source)
        positions = []

    if config.c_pos > 0.0:
        add_position_cost(ne, grid, positions, config.c_pos)
        add_lonlat_position_cost(ne, grid, lonlat, config.c_pos * config.c_lon, config.c_pos * config.c_lat)
    else:
        logger.warning("c_pos is 0: position measurements are ignored")
    if config.c_vel > 0.0:
        add_velocity_cost(ne, grid, meas.of_kind(Kind.VELOCITY), config.c_vel)
    if config.c_acc > 0.0:
        add_acceleration_cost(ne, grid, meas.of_kind(Kind.ACCELERATION), config.c_acc)
    if config.use_heading_dir and config.c_heading_dir > 0.0:
        heads = meas.of_kind(Kind.HEADING) if heading_meas is None else list(heading_meas)
        add_heading_direction_cost(ne, grid, heads, config.c_heading_dir)
    if config.c_zero_vel > 0.0:
        intervals = detect_standstill(meas, config.v_stop, config.T_stop)
        logger.debug("standstill intervals: %s", intervals)
        add_zero_velocity_regularization(ne, grid, intervals, config.c_zero_vel)
    add_acceleration_regularization(ne, grid, config.lambda_acc_reg)
    return ne.symmetrize()
