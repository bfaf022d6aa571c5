"""Parametric model families.

Two built-in families cover the experiments this package ships with:
a normal location model with known scale, and normal linear regression
on a fixed design. Both expose the same small surface, so new families
can be added by implementing ``param_dim``, ``log_density_matrix``,
``power_integral`` and ``sample``:

* pointwise densities ``f_i(x | theta)`` (the index ``i`` only matters
  for regression, where observation ``i`` has mean ``t_i @ beta``),
* the power integral ``int f_i(. | theta)^(1+a)``, closed form for
  normal models,
* a sampler.

Families are immutable after construction and safe to share across
threads; samplers take an explicit generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._utils import LOG_2PI, as_data_vector, as_theta, as_theta_batch, check_alpha

__all__ = ["NormalLocation", "NormalLinearRegression"]


def _normal_power_integral(sigma: float, alpha: float) -> float:
    # int N(x; m, s^2)^(1+a) dx = (2 pi s^2)^(-a/2) (1+a)^(-1/2), any m
    if alpha == 0.0:
        return 1.0
    return float(np.exp(-0.5 * alpha * (LOG_2PI + 2.0 * np.log(sigma))) / np.sqrt(1.0 + alpha))


@dataclass(frozen=True)
class NormalLocation:
    """Normal model with unknown mean and known scale ``sigma``."""

    sigma: float = 1.0

    #: single location parameter
    param_dim = 1
    #: density is a shift family in the parameter; per-observation
    #: normalizers do not depend on theta
    location_family = True
    sigma_known = True

    def __post_init__(self):
        if not (float(self.sigma) > 0.0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    def obs_sigma(self, theta=None) -> float:
        return float(self.sigma)

    def mean_values(self, theta, n: int) -> np.ndarray:
        theta = as_theta(theta, 1)
        return np.full(n, theta[0])

    def log_density(self, theta, x, i: int | None = None):
        """log f(x | theta); vectorized over ``x``. The index is ignored."""
        theta = as_theta(theta, 1)
        x = np.asarray(x, dtype=float)
        z = (x - theta[0]) / self.sigma
        return -0.5 * (LOG_2PI + 2.0 * np.log(self.sigma) + z * z)

    def density(self, theta, x, i: int | None = None):
        return np.exp(self.log_density(theta, x, i))

    def log_density_matrix(self, thetas, data) -> np.ndarray:
        """(m, n) matrix of log f(x_j | theta_k) for a theta batch."""
        thetas = as_theta_batch(thetas, 1)
        data = as_data_vector(data)
        z = (data[None, :] - thetas[:, [0]]) / self.sigma
        return -0.5 * (LOG_2PI + 2.0 * np.log(self.sigma) + z * z)

    def density_matrix(self, thetas, z_grid) -> np.ndarray:
        """(m, K) matrix f(z_k | theta_j), used by predictive density mixtures."""
        return np.exp(self.log_density_matrix(thetas, z_grid))

    def power_integral(self, alpha, theta=None, i: int | None = None) -> float:
        return _normal_power_integral(self.sigma, check_alpha(_alpha_value(alpha)))

    def power_integral_batch(self, alpha, thetas) -> np.ndarray:
        m = as_theta_batch(thetas, 1).shape[0]
        return np.full(m, self.power_integral(alpha))

    def sample(self, theta, n: int, rng: np.random.Generator) -> np.ndarray:
        theta = as_theta(theta, 1)
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return rng.normal(theta[0], self.sigma, size=int(n))


@dataclass(frozen=True)
class NormalLinearRegression:
    """Normal linear regression with a fixed design.

    Observation ``i`` is normal with mean ``design[i] @ beta`` and scale
    ``sigma``. With ``sigma_known=False`` the parameter vector is
    ``(beta..., sigma)`` and the trailing coordinate is the unknown scale.
    """

    design: np.ndarray
    sigma: float = 1.0
    sigma_known: bool = True

    location_family = True

    def __post_init__(self):
        design = np.asarray(self.design, dtype=float)
        if design.ndim != 2 or design.shape[0] < 1:
            raise ValueError("design must be a 2-D matrix with at least one row")
        if np.linalg.matrix_rank(design) < design.shape[1]:
            raise ValueError("design must have full column rank")
        if not (float(self.sigma) > 0.0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        design.setflags(write=False)
        object.__setattr__(self, "design", design)

    @property
    def n_obs(self) -> int:
        return self.design.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.design.shape[1]

    @property
    def param_dim(self) -> int:
        return self.n_covariates + (0 if self.sigma_known else 1)

    def _split(self, theta):
        theta = as_theta(theta, self.param_dim)
        if self.sigma_known:
            return theta, float(self.sigma)
        if theta[-1] <= 0.0:
            raise ValueError("scale coordinate of theta must be > 0")
        return theta[:-1], float(theta[-1])

    def obs_sigma(self, theta=None) -> float:
        if self.sigma_known or theta is None:
            return float(self.sigma)
        return self._split(theta)[1]

    def mean_values(self, theta, n: int | None = None) -> np.ndarray:
        beta, _ = self._split(theta)
        return self.design @ beta

    def log_density(self, theta, x, i: int | None = None):
        """log f_i(x | theta) for design row ``i`` (required)."""
        if i is None:
            raise ValueError("regression density needs an observation index i")
        if not (0 <= int(i) < self.n_obs):
            raise ValueError(f"observation index {i} out of range [0, {self.n_obs})")
        beta, sigma = self._split(theta)
        x = np.asarray(x, dtype=float)
        z = (x - self.design[int(i)] @ beta) / sigma
        return -0.5 * (LOG_2PI + 2.0 * np.log(sigma) + z * z)

    def density(self, theta, x, i: int | None = None):
        return np.exp(self.log_density(theta, x, i))

    def log_density_matrix(self, thetas, data) -> np.ndarray:
        """(m, n) matrix of log f_i(x_i | theta_j); data length must match the design."""
        thetas = as_theta_batch(thetas, self.param_dim)
        data = as_data_vector(data)
        if data.size != self.n_obs:
            raise ValueError(
                f"data has {data.size} observations, design has {self.n_obs} rows"
            )
        if self.sigma_known:
            betas, sig = thetas, np.full(thetas.shape[0], float(self.sigma))
        else:
            betas, sig = thetas[:, :-1], thetas[:, -1]
            if np.any(sig <= 0.0):
                raise ValueError("scale coordinate of theta must be > 0")
        resid = data[None, :] - betas @ self.design.T
        z = resid / sig[:, None]
        return -0.5 * (LOG_2PI + 2.0 * np.log(sig)[:, None] + z * z)

    def density_matrix(self, thetas, z_grid, i: int | None = None) -> np.ndarray:
        if i is None:
            raise ValueError("regression density needs an observation index i")
        thetas = as_theta_batch(thetas, self.param_dim)
        z_grid = np.asarray(z_grid, dtype=float)
        if self.sigma_known:
            betas, sig = thetas, np.full(thetas.shape[0], float(self.sigma))
        else:
            betas, sig = thetas[:, :-1], thetas[:, -1]
        mean = betas @ self.design[int(i)]
        z = (z_grid[None, :] - mean[:, None]) / sig[:, None]
        return np.exp(-0.5 * (LOG_2PI + 2.0 * np.log(sig)[:, None] + z * z))

    def power_integral(self, alpha, theta=None, i: int | None = None) -> float:
        alpha = check_alpha(_alpha_value(alpha))
        sigma = self.obs_sigma(theta)
        return _normal_power_integral(sigma, alpha)

    def power_integral_batch(self, alpha, thetas) -> np.ndarray:
        alpha = check_alpha(_alpha_value(alpha))
        thetas = as_theta_batch(thetas, self.param_dim)
        if self.sigma_known:
            return np.full(thetas.shape[0], _normal_power_integral(self.sigma, alpha))
        sig = thetas[:, -1]
        if np.any(sig <= 0.0):
            raise ValueError("scale coordinate of theta must be > 0")
        if alpha == 0.0:
            return np.ones(thetas.shape[0])
        return np.exp(-0.5 * alpha * (LOG_2PI + 2.0 * np.log(sig))) / np.sqrt(1.0 + alpha)

    def sample(self, theta, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        if int(n) != self.n_obs:
            raise ValueError(
                f"regression sample size must equal the number of design rows "
                f"({self.n_obs}), got {n}"
            )
        beta, sigma = self._split(theta)
        return self.design @ beta + rng.normal(0.0, sigma, size=self.n_obs)


def _alpha_value(alpha) -> float:
    # accept plain floats or AlphaConfig-like objects
    return float(getattr(alpha, "alpha", alpha))
