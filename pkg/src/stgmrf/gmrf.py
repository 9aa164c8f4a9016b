"""Sampling and Gaussian conditioning for GMRFs with zero prior mean.

With latent ``x ~ N(0, Q^{-1})`` and observations ``y = A x + eps``,
``eps ~ N(0, sigma_eps^2 I)``, the posterior has precision
``Q + sigma_eps^{-2} A^T A`` and mean ``Q_post^{-1} sigma_eps^{-2} A^T y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .factor import CholeskyFactor, cholesky, solve_full, solve_upper
from .rng import standard_normal_matrix
from .sparse import ProjectionMatrix, SymmetricSparseMatrix, add_scaled, normal_product


@dataclass(frozen=True)
class SampleConfig:
    seed: int = 0
    n_samples: int = 1
    reordering: str = "amd"
    cores: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.reordering not in ("amd", "identity", "rcm"):
            raise ValueError(f"unknown reordering {self.reordering!r}")


@dataclass(frozen=True, eq=False)
class ObservationModel:
    """Projection ``A`` (observed rows only), noise std and observed values."""

    A: ProjectionMatrix
    sigma_eps: float
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "y", y)
        if not self.sigma_eps > 0:
            raise ValueError("sigma_eps must be positive")
        if y.shape != (self.A.shape[0],):
            raise DimensionMismatch(f"{y.size} observations for a projection with {self.A.shape[0]} rows")
        if not np.all(np.isfinite(y)):
            raise ValueError("observed values must be finite; drop missing rows with from_masked")

    @property
    def n_latent(self) -> int:
        return self.A.shape[1]

    @classmethod
    def from_masked(cls, A: ProjectionMatrix, sigma_eps: float, y) -> "ObservationModel":
        """Drop rows of ``A`` whose ``y`` is NaN (unobserved)."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (A.shape[0],):
            raise DimensionMismatch(f"{y.size} values for a projection with {A.shape[0]} rows")
        keep = np.flatnonzero(~np.isnan(y))
        return cls(A.delete_rows(keep), sigma_eps, y[keep])

    @classmethod
    def direct(cls, y, sigma_eps: float) -> "ObservationModel":
        """Observe latent site ``i`` wherever ``y[i]`` is not NaN."""
        y = np.asarray(y, dtype=np.float64)
        keep = np.flatnonzero(~np.isnan(y))
        return cls(ProjectionMatrix.selection(keep, y.size), sigma_eps, y[keep])


def _check(q: SymmetricSparseMatrix, obs: ObservationModel):
    if obs.n_latent != q.n:
        raise DimensionMismatch(f"observation model has {obs.n_latent} latent columns, prior has {q.n}")


def sample_from_factor(f: CholeskyFactor, cfg: SampleConfig) -> np.ndarray:
    """Draws ``P^T L^{-T} z`` for the factor of ``Q``; one column per sample."""
    z = standard_normal_matrix(cfg.seed, f.n, cfg.n_samples)
    y = solve_upper(f, z)
    out = np.empty_like(y)
    out[f.permutation.perm] = y
    return out


def sample(q: SymmetricSparseMatrix, cfg: SampleConfig) -> np.ndarray:
    """``(n, n_samples)`` draws from ``N(0, Q^{-1})``, deterministic in ``cfg``."""
    return sample_from_factor(cholesky(q, cfg.reordering, cfg.cores), cfg)


def posterior_precision(q_prior: SymmetricSparseMatrix, obs: ObservationModel) -> SymmetricSparseMatrix:
    _check(q_prior, obs)
    if obs.A.shape[0] == 0:
        return q_prior
    return add_scaled(q_prior, normal_product(obs.A, obs.sigma_eps**-2), 1.0, 1.0)


def _rhs(obs: ObservationModel) -> np.ndarray:
    return obs.sigma_eps**-2 * (obs.A.to_scipy().T @ obs.y)


def posterior_mean(
    q_prior: SymmetricSparseMatrix, obs: ObservationModel, reordering: str = "amd", cores: int = 1
) -> np.ndarray:
    f = cholesky(posterior_precision(q_prior, obs), reordering, cores)
    return solve_full(f, _rhs(obs))


def posterior_sample(q_prior: SymmetricSparseMatrix, obs: ObservationModel, cfg: SampleConfig) -> np.ndarray:
    """Posterior draws: ``sample(Q_post, cfg) + mu`` column-wise."""
    f = cholesky(posterior_precision(q_prior, obs), cfg.reordering, cfg.cores)
    mu = solve_full(f, _rhs(obs))
    return sample_from_factor(f, cfg) + mu[:, None]
