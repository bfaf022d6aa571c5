"""Point and predictive-density estimators over a weighted posterior.

Point estimation: the posterior mean (``erpe``) and, on enumerated
supports, the exact or slack-tolerant posterior mode (``amrpe_discrete``).

Predictive densities, one per loss function, all evaluated on a caller
grid: the posterior mixture (squared error), the pointwise weighted
median (absolute error), the squared posterior mean of sqrt-densities
renormalized on the grid (squared Hellinger), and the plug-in density at
the posterior mode (0-1 loss). The mixture is a genuine density by
construction; the median curve need not integrate to one and is stored
unnormalized with its mass reported by ``DensityEstimate.integral``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._utils import trapezoid_weights
from .alpha_likelihood import (
    AlphaConfig,
    alpha_modified_prior_logdensity,
    log_obs_normalizer,
    q_batch,
)
from .errors import NumericalError
from .posterior import WeightedPosterior
from .priors import DiscretePrior

__all__ = [
    "DensityEstimate",
    "erpe",
    "erpde",
    "arpde",
    "hrpde",
    "mrpde",
    "amrpe_discrete",
]


@dataclass(frozen=True)
class DensityEstimate:
    """A density (or density-like curve) tabulated on a sorted grid."""

    z_grid: np.ndarray
    values: np.ndarray
    kind: str
    alpha: float | None = None

    def __post_init__(self):
        z = np.asarray(self.z_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if z.ndim != 1 or z.shape != v.shape:
            raise ValueError("z_grid and values must be equal-length 1-D arrays")
        if np.any(np.diff(z) <= 0.0):
            raise ValueError("z_grid must be strictly increasing")
        if np.any(v < 0.0):
            raise ValueError("density values must be nonnegative")
        z.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "z_grid", z)
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.z_grid))

    def to_csv(self, path) -> None:
        """Write columns z, value, kind, alpha."""
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["z", "value", "kind", "alpha"])
            a = "" if self.alpha is None else repr(float(self.alpha))
            for z, v in zip(self.z_grid, self.values):
                writer.writerow([repr(float(z)), repr(float(v)), self.kind, a])


def erpe(wp: WeightedPosterior) -> np.ndarray:
    """Posterior mean of the parameter."""
    if wp.n_points == 0:
        raise ValueError("empty posterior")
    return wp.mean()


def _density_matrix(family, wp, z_grid, obs_index, chunk_cols: int = 512):
    z_grid = np.asarray(z_grid, dtype=float)
    if obs_index is None:
        return family.density_matrix(wp.points, z_grid)
    return family.density_matrix(wp.points, z_grid, i=obs_index)


def erpde(family, wp: WeightedPosterior, z_grid, alpha=None,
          obs_index=None) -> DensityEstimate:
    """Posterior mixture of model densities: values[k] = sum_j w_j f(z_k | theta_j)."""
    fmat = _density_matrix(family, wp, z_grid, obs_index)
    values = wp.weights @ fmat
    return DensityEstimate(np.asarray(z_grid, dtype=float), values, "erpde",
                           _alpha_of(alpha))


def arpde(family, wp: WeightedPosterior, z_grid, alpha=None,
          obs_index=None) -> DensityEstimate:
    """Pointwise lower weighted median of the density values.

    Convention: at each grid point, the smallest candidate density whose
    cumulative posterior weight (values ascending) reaches one half.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    w = wp.weights
    values = np.empty(z_grid.size)
    step = max(1, (1 << 22) // max(wp.n_points, 1))
    for lo in range(0, z_grid.size, step):
        hi = min(lo + step, z_grid.size)
        fmat = _density_matrix(family, wp, z_grid[lo:hi], obs_index)
        order = np.argsort(fmat, axis=0, kind="stable")
        cum = np.cumsum(np.take_along_axis(np.broadcast_to(w[:, None], fmat.shape),
                                           order, axis=0), axis=0)
        pick = np.argmax(cum >= 0.5, axis=0)
        cols = np.arange(hi - lo)
        values[lo:hi] = fmat[order[pick, cols], cols]
    return DensityEstimate(z_grid, values, "arpde", _alpha_of(alpha))


def hrpde(family, wp: WeightedPosterior, z_grid, alpha=None,
          obs_index=None) -> DensityEstimate:
    """Squared posterior mean of sqrt-densities, renormalized on the grid.

    The grid must carry essentially all of the curve's mass: endpoint
    values above 1e-10 of the peak raise, since the normalizer would then
    depend on the truncation.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    fmat = _density_matrix(family, wp, z_grid, obs_index)
    raw = (wp.weights @ np.sqrt(fmat)) ** 2
    peak = raw.max()
    if peak <= 0.0:
        raise NumericalError("normalizer vanished: zero curve on the grid")
    if max(raw[0], raw[-1]) > 1e-10 * peak:
        raise NumericalError(
            "normalizer vanished: grid endpoints carry mass, widen the grid"
        )
    total = float(np.trapezoid(raw, z_grid))
    if total <= 0.0 or not np.isfinite(total):
        raise NumericalError("normalizer vanished")
    return DensityEstimate(z_grid, raw / total, "hrpde", _alpha_of(alpha))


def mrpde(family, theta_hat, z_grid, alpha=None, obs_index=None) -> DensityEstimate:
    """Plug-in model density at a (near-)modal parameter value."""
    z_grid = np.asarray(z_grid, dtype=float)
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    if obs_index is None:
        values = np.asarray(family.density(theta_hat, z_grid), dtype=float)
    else:
        values = np.asarray(family.density(theta_hat, z_grid, i=obs_index), dtype=float)
    return DensityEstimate(z_grid, values, "mrpde", _alpha_of(alpha))


def amrpe_discrete(family, prior: DiscretePrior, data, alpha,
                   delta_n: float = 0.0) -> list[np.ndarray]:
    """Near-modal parameter set on an enumerated support.

    Returns every support point whose modified-posterior log score is
    within n * delta_n of the maximum (the exact argmax set at
    delta_n = 0, where the comparison is >=; strictly above the slack
    threshold otherwise). Points come back in support-enumeration order,
    so callers wanting a single value take the first.
    """
    if not isinstance(prior, DiscretePrior):
        raise ValueError("amrpe_discrete needs a DiscretePrior with enumerated support")
    if prior.size == 0:
        raise ValueError("empty prior support")
    delta_n = float(delta_n)
    if delta_n < 0.0:
        raise ValueError(f"delta_n must be >= 0, got {delta_n}")
    alpha = AlphaConfig.of(alpha)
    data = np.asarray(data, dtype=float).ravel()
    n = data.size

    q_vals = q_batch(family, data, prior.points, alpha)
    norms = np.array(
        [n * log_obs_normalizer(family, p, alpha) for p in prior.points]
    )
    prior_logs = np.array(
        [
            alpha_modified_prior_logdensity(family, prior, p, alpha, n)
            for p in prior.points
        ]
    )
    scores = prior_logs + (q_vals - norms)
    top = scores.max()
    if delta_n == 0.0:
        keep = scores >= top
    else:
        keep = scores > top - n * delta_n
    return [prior.points[j].copy() for j in np.where(keep)[0]]


def _alpha_of(alpha) -> float | None:
    if alpha is None:
        return None
    return AlphaConfig.of(alpha).alpha
