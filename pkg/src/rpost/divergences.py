"""Divergences and distances between densities tabulated on grids.

All grid functionals use the trapezoid rule; on smooth integrands that
decay to zero at the endpoints this is accurate to near machine
precision, which is why the default evaluation grid spans the reference
mean +/- 10 standard deviations with 4001 points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._utils import trapezoid_weights
from .alpha_likelihood import AlphaConfig, log_obs_normalizer

__all__ = [
    "GridDensity",
    "divergence_grid",
    "kld",
    "kld_normal_closed",
    "hellinger_sq",
    "l1",
    "t_variation",
    "d_alpha_modified",
]


@dataclass(frozen=True)
class GridDensity:
    """Nonnegative values on a sorted grid; ``normalized`` asserts unit mass."""

    z_grid: np.ndarray
    values: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        z = np.asarray(self.z_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if z.ndim != 1 or z.shape != v.shape:
            raise ValueError("z_grid and values must be equal-length 1-D arrays")
        if np.any(np.diff(z) <= 0.0):
            raise ValueError("z_grid must be strictly increasing")
        if np.any(v < 0.0):
            raise ValueError("density values must be nonnegative")
        if self.normalized:
            mass = np.trapezoid(v, z)
            if not (0.99 <= mass <= 1.01):
                raise ValueError(f"density integrates to {mass:.6f}, not ~1 "
                                 "(pass normalized=False for raw curves)")
        z.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "z_grid", z)
        object.__setattr__(self, "values", v)


def divergence_grid(center: float, sd: float, points: int = 4001,
                    width: float = 10.0) -> np.ndarray:
    """Default evaluation grid: center +/- width * sd."""
    return np.linspace(center - width * sd, center + width * sd, int(points))


def _values_on(obj, z_grid) -> np.ndarray:
    if isinstance(obj, GridDensity):
        if z_grid is not None and not np.array_equal(obj.z_grid, np.asarray(z_grid)):
            raise ValueError("grid densities must share the evaluation grid")
        return obj.values
    if callable(obj):
        if z_grid is None:
            raise ValueError("a z_grid is required with callable densities")
        return np.asarray(obj(np.asarray(z_grid, dtype=float)), dtype=float)
    vals = np.asarray(obj, dtype=float)
    if z_grid is None or vals.shape != np.asarray(z_grid).shape:
        raise ValueError("array densities must match the z_grid shape")
    return vals


def _common(p, q, z_grid):
    if z_grid is None:
        for obj in (p, q):
            if isinstance(obj, GridDensity):
                z_grid = obj.z_grid
                break
    if z_grid is None:
        raise ValueError("no evaluation grid available")
    z = np.asarray(z_grid, dtype=float)
    return _values_on(p, z), _values_on(q, z), z


def kld(p, q, z_grid=None) -> float:
    """Relative entropy int p log(p/q) by trapezoid rule.

    Points with p = 0 contribute nothing; any point with p > 0 and q = 0
    makes the divergence +inf.
    """
    pv, qv, z = _common(p, q, z_grid)
    pos = pv > 0.0
    if np.any(qv[pos] == 0.0):
        return np.inf
    integrand = np.zeros_like(pv)
    integrand[pos] = pv[pos] * (np.log(pv[pos]) - np.log(qv[pos]))
    return float(trapezoid_weights(z) @ integrand)


def kld_normal_closed(mu0: float, s0: float, mu1: float, s1: float) -> float:
    """Closed form for KLD(N(mu0, s0^2), N(mu1, s1^2)); the quadrature oracle."""
    if s0 <= 0.0 or s1 <= 0.0:
        raise ValueError("scales must be positive")
    return float(np.log(s1 / s0) + (s0**2 + (mu0 - mu1) ** 2) / (2.0 * s1**2) - 0.5)


def hellinger_sq(p, q, z_grid=None) -> float:
    """Squared Hellinger distance int (sqrt p - sqrt q)^2; in [0, 2]."""
    pv, qv, z = _common(p, q, z_grid)
    return float(trapezoid_weights(z) @ (np.sqrt(pv) - np.sqrt(qv)) ** 2)


def l1(p, q, z_grid=None) -> float:
    """Total L1 distance int |p - q|; in [0, 2]."""
    pv, qv, z = _common(p, q, z_grid)
    return float(trapezoid_weights(z) @ np.abs(pv - qv))


def t_variation(p_masses, q_masses) -> float:
    """Sum over partition cells of |P(A) - Q(A)|."""
    p = np.asarray(p_masses, dtype=float).ravel()
    q = np.asarray(q_masses, dtype=float).ravel()
    if p.shape != q.shape:
        raise ValueError(f"mass vectors differ in length: {p.size} vs {q.size}")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0.0) or v.sum() > 1.0 + 1e-12:
            raise ValueError(f"{name} masses must be nonnegative with total <= 1")
    return float(np.sum(np.abs(p - q)))


def d_alpha_modified(family, theta, alpha, true_density, z_grid,
                     support=None) -> float:
    """Relative entropy from the true density to the renormalized model.

    At alpha = 0 the renormalized model is the model itself, so this is
    plain kld(g, f_theta). The grid must sit inside the model's bounded
    data window (mean +/- 12 sigma by default).
    """
    alpha = AlphaConfig.of(alpha)
    z = np.asarray(z_grid, dtype=float)
    g_vals = _values_on(true_density, z)
    log_f = np.asarray(family.log_density(theta, z), dtype=float)
    if alpha.zero_branch:
        model_vals = np.exp(log_f)
    else:
        a = alpha.alpha
        pi_term = family.power_integral(alpha, theta) / (1.0 + a)
        log_norm = log_obs_normalizer(family, theta, alpha, support=support)
        model_vals = np.exp((np.exp(a * log_f) - 1.0) / a - pi_term - log_norm)
    return kld(g_vals, model_vals, z)
