"""Solvers for the symmetric normal equations ``Q w = b``."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .costs import NormalEquations
from .errors import SingularSystemError
from .model import WeightVector

RESIDUAL_TOL = 1e-8
ORACLE_MAX_DIM = 60
REFINEMENT_STEPS = 2

_ADVICE = "add position measurements or increase lambda_acc_reg"


def _as_system(ne):
    if isinstance(ne, NormalEquations):
        return ne.Q, ne.b
    Q, b = ne
    return np.asarray(Q, dtype=float), np.asarray(b, dtype=float)


def _refine(Q, b, w, apply_inverse, steps=REFINEMENT_STEPS):
    """Iterative refinement with residuals in extended precision.

    Q reaches condition numbers near 1e8 on fine grids; one correction with
    an accurate residual recovers the digits lost in the factorization.
    """
    Ql = Q.astype(np.longdouble)
    bl = b.astype(np.longdouble)
    for _ in range(steps):
        r = bl - Ql @ w.astype(np.longdouble)
        w = w + apply_inverse(r.astype(float))
    return w


def solve_stacked(Q: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve with symmetric diagonal scaling.

    Raises SingularSystemError instead of returning a vector whose residual
    exceeds ``RESIDUAL_TOL`` (relative to ``max(1, |b|_inf)``).
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or b.shape != (Q.shape[0],):
        raise ValueError(f"incompatible system shapes {Q.shape} and {b.shape}")
    if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(b))):
        raise SingularSystemError("normal equations contain non-finite entries")
    d = np.diag(Q)
    free = np.flatnonzero(d <= 0.0)
    if free.size:
        raise SingularSystemError(
            f"weights {free[:10].tolist()} are unconstrained (zero diagonal); {_ADVICE}"
        )
    # Jacobi scaling: position-basis columns grow like t^3, so raw Q is badly scaled
    s = 1.0 / np.sqrt(d)
    A = Q * s[:, None] * s[None, :]
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations are not positive definite ({exc}); {_ADVICE}") from None
    def apply_inverse(rhs):
        return s * scipy.linalg.cho_solve(factor, s * rhs, check_finite=False)

    w = _refine(Q, b, apply_inverse(b), apply_inverse)

    residual = np.max(np.abs(Q @ w - b)) / max(1.0, np.max(np.abs(b)))
    if not np.isfinite(residual) or residual > RESIDUAL_TOL:
        raise SingularSystemError(
            f"normal equations are numerically singular (relative residual {residual:.3g}); {_ADVICE}"
        )
    return w


def solve(ne: NormalEquations) -> WeightVector:
    """Minimiser of ``1/2 w^T Q w - b^T w`` as a two-block weight vector."""
    Q, b = _as_system(ne)
    return WeightVector.from_stacked(solve_stacked(Q, b))


def oracle_solve_stacked(Q: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm minimiser via an eigendecomposition pseudo-inverse.

    Test oracle only; shares no code with :func:`solve_stacked`.
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    if Q.shape[0] > ORACLE_MAX_DIM:
        raise ValueError(f"oracle is limited to dimension {ORACLE_MAX_DIM}")
    evals, evecs = np.linalg.eigh(0.5 * (Q + Q.T))
    cutoff = max(abs(evals).max(), 0.0) * Q.shape[0] * np.finfo(float).eps
    inv = np.zeros_like(evals)
    keep = evals > cutoff
    inv[keep] = 1.0 / evals[keep]

    def apply_inverse(rhs):
        return evecs @ (inv * (evecs.T @ rhs))

    return _refine(Q, b, apply_inverse(b), apply_inverse)


def oracle_solve(ne: NormalEquations) -> WeightVector:
    Q, b = _as_system(ne)
    return WeightVector.from_stacked(oracle_solve_stacked(Q, b))
