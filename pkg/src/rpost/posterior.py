"""Posterior engines over the down-weighted likelihood.

Two interchangeable engines produce the same ``WeightedPosterior``
representation: deterministic grid quadrature (1-D or 2-D lattices,
the oracle engine) and self-normalized Gaussian importance sampling
(the workhorse at scale). Everything downstream consumes the weighted
sample, so estimators never care which engine produced it.

All weight handling happens on the log scale with a running-max shift
before exponentiation; totals of the surrogate likelihood can reach
hundreds for large samples and would overflow a naive exp.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from ._utils import as_data_vector, trapezoid_weights
from .alpha_likelihood import AlphaConfig, log_obs_normalizer, q_batch
from .errors import GridCoverageError, NumericalError
from .priors import DiscretePrior, NormalConjugate

__all__ = [
    "ProposalSpec",
    "WeightedPosterior",
    "log_unnorm_posterior",
    "log_unnorm_posterior_batch",
    "grid_posterior",
    "importance_sample",
    "discrete_posterior",
    "posterior_expectation",
    "r_marginal_logdensity",
    "merging_statistic",
]

#: importance runs whose effective sample size lands below this are retried
#: once with doubled proposal covariance, then flagged degenerate
ESS_FLOOR = 50.0


@dataclass(frozen=True)
class ProposalSpec:
    """Gaussian importance proposal: mean vector, covariance, draw count."""

    mean: np.ndarray
    covariance: np.ndarray
    draws: int = 20000

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean {mean.shape}")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        if int(self.draws) < 1000:
            raise ValueError(f"draws must be >= 1000, got {self.draws}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "draws", int(self.draws))


@dataclass(frozen=True)
class WeightedPosterior:
    """Self-normalized weighted parameter sample.

    ``log_weights`` satisfy logsumexp == 0; ``ess`` is 1 / sum(w^2),
    capped by the point count. ``degenerate`` marks an importance run
    whose effective sample size stayed below the floor after retry.
    """

    points: np.ndarray
    log_weights: np.ndarray
    ess: float
    source: str
    degenerate: bool = False

    @classmethod
    def from_log_weights(cls, points, log_weights, source, ess=None, degenerate=False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        lw = np.asarray(log_weights, dtype=float)
        if points.shape[0] != lw.size:
            raise ValueError("points and log_weights must have equal length")
        if np.all(np.isneginf(lw)):
            raise NumericalError("all posterior weights vanished")
        # normalize via running-max subtraction: any constant shift of the
        # log scale cancels exactly, so the result is shift-invariant
        # bit for bit
        peak = lw.max()
        if not np.isfinite(peak):
            raise NumericalError("non-normalizable posterior")
        shifted = lw - peak
        w = np.exp(shifted)
        total = w.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise NumericalError("non-normalizable posterior")
        lw = shifted - np.log(total)
        if ess is None:
            ess = float(total * total / np.sum(w * w))
        ess = float(min(ess, lw.size))
        points.setflags(write=False)
        lw.setflags(write=False)
        return cls(points=points, log_weights=lw, ess=ess, source=source,
                   degenerate=degenerate)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def cov(self) -> np.ndarray:
        d = self.points - self.mean()[None, :]
        return (self.weights[:, None] * d).T @ d

    def var(self) -> np.ndarray:
        d = self.points - self.mean()[None, :]
        return self.weights @ (d * d)

    def coarsen(self, resolution: float, drop_tail: float = 1e-12) -> "WeightedPosterior":
        """Merge points into weighted-centroid bins of the given width.

        The centroid placement cancels the first-order error of the merge,
        so mixtures formed from the result differ from the exact ones by
        O(max|f''| * resolution^2 / 8). Points carrying a combined weight
        below ``drop_tail`` are discarded first (importance samples leave
        clouds of effectively weightless proposal-tail points). Intended
        as a speed knob before density mixtures; a non-positive resolution
        is a no-op.
        """
        if resolution <= 0.0:
            return self
        w = self.weights
        points = self.points
        if drop_tail > 0.0 and w.size > 1:
            order = np.argsort(w)
            cut = np.searchsorted(np.cumsum(w[order]), drop_tail)
            if cut > 0:
                keep = np.sort(order[cut:])
                w, points = w[keep], points[keep]
        keys = np.round(points / resolution).astype(np.int64)
        _, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = np.ravel(inverse)
        k = int(inverse.max()) + 1
        bin_w = np.bincount(inverse, weights=w, minlength=k)
        centroids = np.empty((k, self.dim))
        for d in range(self.dim):
            centroids[:, d] = np.bincount(
                inverse, weights=w * points[:, d], minlength=k
            ) / bin_w
        with np.errstate(divide="ignore"):
            lw = np.log(bin_w)
        return WeightedPosterior.from_log_weights(
            centroids, lw, source=self.source, ess=min(self.ess, k),
            degenerate=self.degenerate,
        )

    def to_csv(self, path) -> None:
        """Write columns theta_1..theta_p, weight."""
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"theta_{d + 1}" for d in range(self.dim)] + ["weight"])
            for row, w in zip(self.points, self.weights):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])


def log_unnorm_posterior(family, prior, data, theta, alpha) -> float:
    """q(data | theta) + log prior(theta); -inf where the prior has no mass."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return float(log_unnorm_posterior_batch(family, prior, data, theta[None, :], alpha)[0])


def log_unnorm_posterior_batch(family, prior, data, thetas, alpha) -> np.ndarray:
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    log_pi = prior.log_density_batch(thetas)
    out = np.full(thetas.shape[0], -np.inf)
    live = log_pi > -np.inf
    if np.any(live):
        out[live] = q_batch(family, data, thetas[live], alpha) + log_pi[live]
    return out


def _as_lattice(grid):
    """Normalize a grid spec to (points, log_cell_volume, boundary_mask)."""
    if isinstance(grid, (tuple, list)) and len(grid) == 2:
        ax0 = np.asarray(grid[0], dtype=float)
        ax1 = np.asarray(grid[1], dtype=float)
        w0, w1 = trapezoid_weights(ax0), trapezoid_weights(ax1)
        t0, t1 = np.meshgrid(ax0, ax1, indexing="ij")
        points = np.column_stack([t0.ravel(), t1.ravel()])
        logvol = np.log(np.outer(w0, w1)).ravel()
        boundary = np.zeros((ax0.size, ax1.size), dtype=bool)
        boundary[0, :] = boundary[-1, :] = True
        boundary[:, 0] = boundary[:, -1] = True
        return points, logvol, boundary.ravel()
    axis = np.asarray(grid, dtype=float)
    if axis.ndim != 1:
        raise ValueError("grid must be a 1-D array or a pair of axes")
    points = axis[:, None]
    logvol = np.log(trapezoid_weights(axis))
    boundary = np.zeros(axis.size, dtype=bool)
    boundary[[0, -1]] = True
    return points, logvol, boundary


def grid_posterior(family, prior, data, alpha, grid) -> WeightedPosterior:
    """Deterministic quadrature posterior on a 1-D grid or 2-D lattice.

    Raises ``GridCoverageError`` when the unnormalized density at the grid
    boundary exceeds 1e-12 of its maximum: either the grid is too narrow or
    the posterior is not normalizable (flat improper-prior tails).
    """
    points, logvol, boundary = _as_lattice(grid)
    lp = log_unnorm_posterior_batch(family, prior, data, points, alpha)
    if np.all(np.isneginf(lp)):
        raise NumericalError("non-normalizable posterior: zero mass on the grid")
    peak = lp.max()
    if not np.isfinite(peak):
        raise NumericalError("non-normalizable posterior")
    edge = lp[boundary].max()
    if edge - peak > np.log(1e-12):
        raise GridCoverageError(
            "posterior mass escapes grid: boundary density is "
            f"{np.exp(edge - peak):.2e} of the maximum"
        )
    return WeightedPosterior.from_log_weights(points, lp + logvol, source="GridQuadrature")


def posterior_width_factor(alpha, sigma: float = 1.0) -> float:
    """Variance inflation of the down-weighted posterior for normal models.

    The local curvature of the surrogate log-likelihood at its mode is
    (2 pi sigma^2)^(-a/2) (1+a)^(-3/2) times the ordinary information, so
    the pseudo-posterior is wider than the ordinary one by the reciprocal
    factor. Gaussian proposals must be at least half as wide as the
    target or the importance weights have infinite variance; scale OLS-
    based proposal covariances by this factor (it is 1 at alpha = 0).
    """
    a = AlphaConfig.of(alpha).alpha
    return float((2.0 * np.pi * sigma**2) ** (a / 2.0) * (1.0 + a) ** 1.5)


def _gaussian_batch(proposal: ProposalSpec, rng: np.random.Generator, draws: int):
    p = proposal.mean.size
    chol = np.linalg.cholesky(proposal.covariance)
    z = rng.standard_normal(size=(draws, p))
    thetas = proposal.mean[None, :] + z @ chol.T
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    log_q = -0.5 * (p * np.log(2.0 * np.pi) + log_det + np.sum(z * z, axis=1))
    return thetas, log_q


def importance_sample(family, prior, data, alpha, proposal: ProposalSpec,
                      rng: np.random.Generator) -> WeightedPosterior:
    """Self-normalized importance sampling from a Gaussian proposal.

    If the effective sample size lands below the floor, the draw is retried
    once with the proposal covariance doubled; a second failure is flagged
    on the result rather than raised.
    """
    attempt = proposal
    for retry in (False, True):
        thetas, log_q = _gaussian_batch(attempt, rng, attempt.draws)
        lp = log_unnorm_posterior_batch(family, prior, data, thetas, alpha)
        if np.all(np.isneginf(lp)):
            raise NumericalError("all importance weights vanished")
        wp = WeightedPosterior.from_log_weights(
            thetas, lp - log_q, source="ImportanceSampling"
        )
        if wp.ess >= ESS_FLOOR:
            return wp
        if not retry:
            attempt = replace(attempt, covariance=2.0 * attempt.covariance)
    return replace(wp, degenerate=True)


def discrete_posterior(family, prior: DiscretePrior, data, alpha) -> WeightedPosterior:
    """Exact posterior on the enumerated support of a discrete prior."""
    if not isinstance(prior, DiscretePrior):
        raise ValueError("discrete_posterior needs a DiscretePrior")
    lp = q_batch(family, data, prior.points, alpha) + np.log(prior.masses)
    return WeightedPosterior.from_log_weights(prior.points, lp, source="GridQuadrature")


def posterior_expectation(wp: WeightedPosterior, h) -> np.ndarray:
    """Posterior expectation of h; h maps the (m, p) point array to (m,) or (m, k)."""
    vals = np.asarray(h(wp.points), dtype=float)
    if vals.shape[0] != wp.n_points:
        raise ValueError("h must return one row per posterior point")
    if not np.all(np.isfinite(vals)):
        raise ValueError("h returned non-finite values")
    return wp.weights @ vals


def _log_prior_integral(family, prior, data, alpha, theta_grid) -> float:
    """log of int exp(q(data | theta)) prior(theta) dtheta."""
    if isinstance(prior, DiscretePrior):
        lp = q_batch(family, data, prior.points, alpha) + np.log(prior.masses)
        return float(logsumexp(lp))
    axis = np.asarray(theta_grid, dtype=float)
    if axis.ndim != 1:
        raise ValueError("theta_grid must be 1-D for a continuous prior")
    points = axis[:, None]
    lp = log_unnorm_posterior_batch(family, prior, data, points, alpha)
    return float(logsumexp(lp + np.log(trapezoid_weights(axis))))


def r_marginal_logdensity(family, prior, data, alpha, theta_grid=None,
                          support=None) -> float:
    """Log marginal density of the data under the down-weighted model.

    The normalizing constant integrates the per-observation normalizer to
    the n-th power against the prior; for the built-in location families it
    collapses to n * log(normalizer) + log prior mass. Needs a prior with
    finite total mass.
    """
    alpha = AlphaConfig.of(alpha)
    data = as_data_vector(data)
    n = data.size
    log_mass = prior.log_total_mass()
    if not np.isfinite(log_mass):
        raise NumericalError("marginal undefined: prior has infinite total mass")

    if isinstance(prior, DiscretePrior):
        logs = np.array(
            [
                n * log_obs_normalizer(family, p, alpha, support=support) + np.log(m)
                for p, m in zip(prior.points, prior.masses)
            ]
        )
        log_mn = float(logsumexp(logs))
    elif getattr(family, "location_family", False) and getattr(family, "sigma_known", True):
        log_q0 = log_obs_normalizer(family, None, alpha, support=support)
        log_mn = n * log_q0 + log_mass
    else:
        raise NumericalError(
            "marginal undefined: no finite normalizer route for this family/prior"
        )

    if theta_grid is None and not isinstance(prior, DiscretePrior):
        theta_grid = default_theta_grid(family, prior, data, alpha)
    log_num = _log_prior_integral(family, prior, data, alpha, theta_grid)
    return float(log_num - log_mn)


def default_theta_grid(family, prior, data, alpha, points: int = 4001) -> np.ndarray:
    """1-D grid covering the likelihood bump and, for a normal prior, its body."""
    alpha = AlphaConfig.of(alpha)
    data = as_data_vector(data)
    sigma = family.obs_sigma()
    center = float(np.mean(data))
    sd = sigma / np.sqrt(data.size) * (1.0 + alpha.alpha)
    segments = [np.linspace(center - 14.0 * sd, center + 14.0 * sd, points)]
    if isinstance(prior, NormalConjugate) and prior.dim == 1:
        c, tau = float(prior.center[0]), float(prior.tau)
        post_prec = data.size / sigma**2 + 1.0 / tau**2
        post_mean = (data.size * center / sigma**2 + c / tau**2) / post_prec
        post_sd = (1.0 + alpha.alpha) / np.sqrt(post_prec)
        segments.append(np.linspace(post_mean - 14.0 * post_sd,
                                    post_mean + 14.0 * post_sd, points))
        segments.append(np.linspace(c - 10.0 * tau, c + 10.0 * tau, 2001))
    return np.unique(np.concatenate(segments))


def merging_statistic(family, prior, data, alpha, true_density,
                      theta_grid=None, support=None) -> float:
    """Per-observation log-ratio of the model marginal to the true density.

    Decays toward zero with growing n when the prior charges every
    relative-entropy neighborhood of the truth; stabilizes at a negative
    offset otherwise.
    """
    data = as_data_vector(data)
    log_marg = r_marginal_logdensity(family, prior, data, alpha,
                                     theta_grid=theta_grid, support=support)
    g_vals = np.asarray(true_density(data), dtype=float)
    if np.any(g_vals <= 0.0) or not np.all(np.isfinite(g_vals)):
        raise ValueError("true_density must be positive and finite on the data")
    return float((log_marg - np.sum(np.log(g_vals))) / data.size)
