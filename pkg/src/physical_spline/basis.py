"""Basis functions of the physical spline.

Each axis of a trajectory is a linear combination of ``K + 2`` basis
functions defined on a knot grid ``t_0 = 0 < t_1 < ... < t_{K-1}``:

* index 0 -- constant, carries the initial position,
* index 1 -- ramp ``t - t_0``, carries the initial velocity,
* index ``2 + k`` -- a hat function in acceleration centred at knot ``k``,
  integrated twice to give velocity and position.

The acceleration of the model is therefore piecewise linear, and velocity
and position are its exact integrals.  The first and last hats are
one-sided: the first one only falls (its weight is the acceleration at
``t = 0``) and the last one only rises.  After the last knot every hat is in
its tail, so the model extrapolates at constant velocity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORDERS = (0, 1, 2)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing knot times, starting at exactly 0."""

    knots: np.ndarray

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float)
        if knots.ndim != 1 or knots.size < 2:
            raise ValueError("a time grid needs at least 2 knots")
        if not np.all(np.isfinite(knots)):
            raise ValueError("knots must be finite")
        if knots[0] != 0.0:
            raise ValueError(f"first knot must be 0, got {knots[0]!r}")
        if np.any(np.diff(knots) <= 0.0):
            raise ValueError("knots must be strictly increasing")
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @classmethod
    def uniform(cls, t_end: float, dt: float) -> "TimeGrid":
        """Uniform grid ``0, dt, 2 dt, ...`` whose last knot is >= ``t_end``."""
        if not dt > 0.0:
            raise ValueError("grid spacing must be positive")
        if t_end < 0.0:
            raise ValueError("t_end must be non-negative")
        # the tolerance keeps 10 / 0.5 from producing an extra knot
        n_intervals = max(1, int(np.ceil(t_end / dt - 1e-9)))
        return cls(dt * np.arange(n_intervals + 1))

    @property
    def n_knots(self) -> int:
        return int(self.knots.size)

    @property
    def n_basis(self) -> int:
        """Number of basis functions (and weights) per axis."""
        return self.n_knots + 2

    @property
    def t_end(self) -> float:
        return float(self.knots[-1])

    def extended(self, extra_knots: int) -> "TimeGrid":
        """Append ``extra_knots`` knots spaced like the last interval."""
        if extra_knots < 1:
            raise ValueError("extra_knots must be >= 1")
        step = self.knots[-1] - self.knots[-2]
        tail = self.knots[-1] + step * np.arange(1, extra_knots + 1)
        return TimeGrid(np.concatenate([self.knots, tail]))

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        d = np.diff(self.knots)
        return bool(np.allclose(d, d[0], rtol=rtol, atol=0.0))

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return np.array_equal(self.knots, other.knots)

    def __hash__(self):
        return hash(self.knots.tobytes())


def _hat_columns(knots: np.ndarray, t: np.ndarray, order: int) -> np.ndarray:
    """Evaluate all hat-derived basis functions, shape ``(len(t), K)``."""
    gaps = np.diff(knots)
    left = np.concatenate([[0.0], gaps])  # t_k - t_{k-1}, 0 for the first hat
    right = np.concatenate([gaps, [0.0]])  # t_{k+1} - t_k, 0 for the last hat

    s = t[:, None] - knots[None, :]
    a = np.broadcast_to(left, s.shape)
    b = np.broadcast_to(right, s.shape)
    safe_a = np.where(a > 0.0, a, 1.0)
    safe_b = np.where(b > 0.0, b, 1.0)

    rising = (a > 0.0) & (s > -a) & (s <= 0.0)
    # the first hat starts at its peak, so t == t_0 belongs to the falling part
    falling = (b > 0.0) & (s <= b) & ((s > 0.0) | ((a == 0.0) & (s == 0.0)))
    tail = s > b

    out = np.zeros(s.shape)
    u = s + a  # time since the left neighbour knot
    if order == 2:
        out = np.where(rising, u / safe_a, out)
        out = np.where(falling, 1.0 - s / safe_b, out)
        # tail acceleration is zero
    elif order == 1:
        out = np.where(rising, 0.5 * u * u / safe_a, out)
        out = np.where(falling, 0.5 * a + s - 0.5 * s * s / safe_b, out)
        out = np.where(tail, 0.5 * (a + b), out)
    else:
        out = np.where(rising, u**3 / (6.0 * safe_a), out)
        out = np.where(
            falling,
            a * a / 6.0 + 0.5 * a * s + 0.5 * s * s - s**3 / (6.0 * safe_b),
            out,
        )
        out = np.where(
            tail,
            a * a / 6.0 + 0.5 * a * b + b * b / 3.0 + 0.5 * (a + b) * (s - b),
            out,
        )
    return out


def _check_order(order) -> int:
    if order not in ORDERS:
        raise ValueError(f"derivative order must be one of {ORDERS}, got {order!r}")
    return int(order)


def design_matrix(grid: TimeGrid, times, order: int = 0) -> np.ndarray:
    """Basis values at many times at once.

    Parameters
    ----------
    grid : TimeGrid
        Knot grid.
    times : array_like
        Model times (seconds since the first knot), all >= 0.
    order : {0, 1, 2}
        Derivative order: position, velocity or acceleration basis.

    Returns
    -------
    numpy.ndarray
        Matrix of shape ``(len(times), grid.n_basis)`` whose entry ``(i, j)``
        is the ``order``-th derivative of basis function ``j`` at ``times[i]``.
    """
    order = _check_order(order)
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size and not np.all(np.isfinite(t)):
        raise ValueError("times must be finite")
    if t.size and t.min() < -1e-9:
        raise ValueError(f"times must be >= 0, got {t.min()!r}")

    out = np.empty((t.size, grid.n_basis))
    if order == 0:
        out[:, 0] = 1.0
        out[:, 1] = t - grid.knots[0]
    elif order == 1:
        out[:, 0] = 0.0
        out[:, 1] = 1.0
    else:
        out[:, :2] = 0.0
    out[:, 2:] = _hat_columns(grid.knots, t, order)
    return out


def eval_basis(grid: TimeGrid, j: int, t: float, order: int = 0) -> float:
    """Value of the ``order``-th derivative of basis function ``j`` at ``t``."""
    order = _check_order(order)
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)):
        raise ValueError(f"basis index must be an integer, got {j!r}")
    if not 0 <= j < grid.n_basis:
        raise ValueError(f"basis index {j} out of range [0, {grid.n_basis - 1}]")
    return float(design_matrix(grid, [t], order)[0, j])
