"""Shared numerical helpers: RNG derivation, trapezoid weights, input checks."""

from __future__ import annotations

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


def derive_rng(seed, *indices) -> np.random.Generator:
    """Counter-based generator derived from an experiment seed and stream indices.

    Philox keys on the full (seed, *indices) tuple, so replications and
    sub-streams are independent and reproducible regardless of execution
    order or worker count.
    """
    ss = np.random.SeedSequence(entropy=(int(seed),) + tuple(int(i) for i in indices))
    return np.random.Generator(np.random.Philox(ss))


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    """Quadrature weights such that w @ f equals np.trapezoid(f, grid)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1-D array with at least 2 points")
    w = np.empty_like(grid)
    w[0] = 0.5 * (grid[1] - grid[0])
    w[-1] = 0.5 * (grid[-1] - grid[-2])
    w[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    return w


def as_data_vector(data) -> np.ndarray:
    data = np.asarray(data, dtype=float).ravel()
    if data.size == 0:
        raise ValueError("data must be nonempty")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite values")
    return data


def as_theta(theta, dim: int) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (dim,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({dim},)")
    return theta


def as_theta_batch(thetas, dim: int) -> np.ndarray:
    """Coerce to an (m, dim) batch of parameter vectors."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[:, None] if dim == 1 else thetas[None, :]
    if thetas.ndim != 2 or thetas.shape[1] != dim:
        raise ValueError(f"theta batch has shape {thetas.shape}, expected (m, {dim})")
    return thetas


def check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 0.0:
        raise ValueError(f"alpha must be a finite real >= 0, got {alpha}")
    return alpha
