"""Prior measures over the parameter space.

Four variants: improper uniform, conjugate normal, Jeffreys 1/sigma, and
discrete sub-probability priors on an enumerated support. ``log_density``
returns -inf where the prior puts no mass; it never raises.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._utils import LOG_2PI, as_theta_batch

__all__ = [
    "ImproperUniform",
    "NormalConjugate",
    "Jeffreys",
    "DiscretePrior",
    "load_discrete_prior",
]


@dataclass(frozen=True)
class ImproperUniform:
    """Flat improper prior, log-density identically zero."""

    is_proper = False

    def log_density(self, theta) -> float:
        return 0.0

    def log_density_batch(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        return np.zeros(thetas.shape[0])

    def log_total_mass(self) -> float:
        return np.inf


@dataclass(frozen=True)
class NormalConjugate:
    """Spherical normal prior N(center, tau^2 I)."""

    center: np.ndarray
    tau: float

    is_proper = True

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if not (float(self.tau) > 0.0):
            raise ValueError(f"tau must be > 0, got {self.tau}")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)

    @property
    def dim(self) -> int:
        return self.center.size

    def log_density(self, theta) -> float:
        return float(self.log_density_batch(np.atleast_1d(theta)[None, :])[0])

    def log_density_batch(self, thetas) -> np.ndarray:
        thetas = as_theta_batch(thetas, self.dim)
        z = (thetas - self.center[None, :]) / self.tau
        return -0.5 * (
            self.dim * (LOG_2PI + 2.0 * np.log(self.tau)) + np.sum(z * z, axis=1)
        )

    def log_total_mass(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Jeffreys:
    """Scale-invariant prior 1/sigma on the trailing coordinate of theta."""

    is_proper = False

    def log_density(self, theta) -> float:
        sigma = float(np.atleast_1d(np.asarray(theta, dtype=float))[-1])
        return -np.log(sigma) if sigma > 0.0 else -np.inf

    def log_density_batch(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        sigma = thetas[:, -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(sigma > 0.0, -np.log(np.where(sigma > 0.0, sigma, 1.0)), -np.inf)
        return out

    def log_total_mass(self) -> float:
        return np.inf


@dataclass(frozen=True)
class DiscretePrior:
    """Sub-probability mass function on an enumerated support.

    ``points`` is (k, p); masses are positive and may sum to less than one.
    """

    points: np.ndarray
    masses: np.ndarray

    is_proper = True

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        masses = np.asarray(self.masses, dtype=float).ravel()
        if points.shape[0] != masses.size or points.shape[0] == 0:
            raise ValueError("points and masses must be nonempty and equal length")
        if np.any(masses <= 0.0):
            raise ValueError("all masses must be positive")
        total = float(masses.sum())
        if total > 1.0 + 1e-12:
            raise ValueError(f"masses sum to {total} > 1")
        points.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "masses", masses)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def _match(self, theta) -> int | None:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        hits = np.where(np.all(self.points == theta[None, :], axis=1))[0]
        return int(hits[0]) if hits.size else None

    def log_density(self, theta) -> float:
        j = self._match(theta)
        return float(np.log(self.masses[j])) if j is not None else -np.inf

    def log_density_batch(self, thetas) -> np.ndarray:
        thetas = as_theta_batch(thetas, self.dim)
        out = np.full(thetas.shape[0], -np.inf)
        for row, theta in enumerate(thetas):
            j = self._match(theta)
            if j is not None:
                out[row] = np.log(self.masses[j])
        return out

    def log_total_mass(self) -> float:
        return float(np.log(self.masses.sum()))


def load_discrete_prior(path) -> DiscretePrior:
    """Read a discrete prior from a JSON array of {"theta": [...], "mass": m}."""
    with open(path) as fh:
        entries = json.load(fh)
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"{path}: expected a nonempty JSON array")
    points = [np.atleast_1d(np.asarray(e["theta"], dtype=float)) for e in entries]
    masses = [float(e["mass"]) for e in entries]
    return DiscretePrior(np.vstack(points), np.asarray(masses))
