"""
Observed information, covariance and Wald intervals at the optimum.
"""

import logging

import numpy as np
from scipy import linalg

from idmodds.exceptions import SingularHessianError

logger = logging.getLogger(__name__)

Z_95 = 1.96


def step_sizes(x, relative_step=1e-4):
    """Per-component finite-difference steps h_j = relative_step * max(1, |x_j|)."""
    x = np.asarray(x, dtype=float)
    return relative_step * np.maximum(1.0, np.abs(x))


def stencil_centre(x, steps, bounds):
    """
    Nearest point to x whose difference stencil x +- h stays inside bounds.

    Components closer than h_j to a bound are moved inwards to exactly
    h_j from it; a box narrower than 2 h_j puts the component in its middle.
    """
    x = np.asarray(x, dtype=float)
    steps = np.asarray(steps, dtype=float)
    lower = np.array([lo for lo, _ in bounds], dtype=float) + steps
    upper = np.array([hi for _, hi in bounds], dtype=float) - steps
    centre = np.clip(x, lower, upper)
    narrow = lower > upper
    centre[narrow] = 0.5 * (lower[narrow] + upper[narrow])
    return centre


def hessian(f, x, steps):
    """
    Central-difference Hessian of a scalar function.

    Diagonal terms use (f(x+h) - 2 f(x) + f(x-h)) / h^2, off-diagonal terms
    the four-point cross difference. The result is exactly symmetric.
    """
    x = np.asarray(x, dtype=float)
    steps = np.asarray(steps, dtype=float)
    k = x.size
    f0 = f(x)
    H = np.zeros((k, k))
    unit = np.eye(k)

    for i in range(k):
        hi = steps[i] * unit[i]
        H[i, i] = (f(x + hi) - 2.0 * f0 + f(x - hi)) / steps[i] ** 2
        for j in range(i):
            hj = steps[j] * unit[j]
            H[i, j] = H[j, i] = (
                f(x + hi + hj) - f(x + hi - hj) - f(x - hi + hj) + f(x - hi - hj)
            ) / (4.0 * steps[i] * steps[j])
    return H


def flat_components(H, atol=0.0):
    """Indices whose Hessian row vanishes (the likelihood ignores them)."""
    H = np.asarray(H, dtype=float)
    return tuple(int(j) for j in range(H.shape[0]) if np.all(np.abs(H[j]) <= atol))


def covariance_from_hessian(H, identifiable=None):
    """
    Inverse of the negative log-likelihood Hessian.

    Only the `identifiable` rows and columns are inverted; the others are
    NaN in the returned matrix.

    Raises:
        SingularHessianError: if the inverted block is singular or not
            positive definite
    """
    H = np.asarray(H, dtype=float)
    k = H.shape[0]
    idx = np.arange(k) if identifiable is None else np.asarray(identifiable, dtype=int)
    cov = np.full((k, k), np.nan)
    if idx.size == 0:
        return cov

    block = H[np.ix_(idx, idx)]
    condition = float(np.linalg.cond(block)) if np.all(np.isfinite(block)) else np.inf
    if not np.isfinite(condition) or condition > 1.0 / np.finfo(float).eps:
        logger.error(f"Singular Hessian, condition number {condition:.3e}")
        raise SingularHessianError("Hessian is singular", condition)
    try:
        factor = linalg.cho_factor(block)
    except linalg.LinAlgError:
        logger.error(f"Hessian is not positive definite, condition number {condition:.3e}")
        raise SingularHessianError("Hessian is not positive definite", condition)

    inverse = linalg.cho_solve(factor, np.eye(idx.size))
    cov[np.ix_(idx, idx)] = 0.5 * (inverse + inverse.T)
    return cov


def wald_intervals(estimate, covariance, z=Z_95):
    """
    Per-component intervals estimate_j +- z * sqrt(cov_jj).

    Intervals are not clipped to the parameter bounds. A NaN variance gives
    a (NaN, NaN) interval; a zero variance (fixed component) a point.
    """
    estimate = np.asarray(estimate, dtype=float)
    se = np.sqrt(np.diag(np.asarray(covariance, dtype=float)))
    return tuple(
        (float(g - z * s), float(g + z * s)) for g, s in zip(estimate, se)
    )
