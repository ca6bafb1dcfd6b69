"""Conjugate Bayesian linear regression over a reward-prediction weight vector.

The posterior is computed in precision form: the precision matrix is
factorized with Cholesky, the mean solved from the factor, and samples drawn
through the covariance factor. Refits are always from the full dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular


@dataclass(frozen=True)
class PriorSpec:
    """Zero-mean isotropic Gaussian prior with variance ``tau2`` and assumed
    reward-noise variance ``sigma2``."""

    feature_dim: int
    tau2: float
    sigma2: float

    def __post_init__(self):
        if self.tau2 <= 0 or self.sigma2 <= 0:
            raise ValueError("prior and noise variances must be positive")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")


@dataclass
class GaussianPosterior:
    mean: np.ndarray
    cov: np.ndarray
    cov_chol: np.ndarray  # lower triangular, cov = L @ L.T


def posterior_fit(prior: PriorSpec, phi: np.ndarray, rewards: np.ndarray) -> GaussianPosterior:
    """Fit the Gaussian posterior from the full design matrix and rewards.

    Zero rows are allowed and reproduce the prior exactly.
    """
    d = prior.feature_dim
    phi = np.asarray(phi, dtype=float).reshape(-1, d)
    rewards = np.asarray(rewards, dtype=float).reshape(-1)
    if phi.shape[0] != rewards.shape[0]:
        raise ValueError("design matrix and reward vector lengths differ")
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(rewards))):
        raise ValueError("non-finite values in posterior inputs")

    precision = np.eye(d) / prior.tau2 + (phi.T @ phi) / prior.sigma2
    factor = cho_factor(precision, lower=True)
    mean = cho_solve(factor, phi.T @ rewards / prior.sigma2)
    cov = cho_solve(factor, np.eye(d))
    cov = 0.5 * (cov + cov.T)
    # If the precision factorizes as C C^T then cov = C^{-T} C^{-1}, so
    # C^{-T} is a (upper-triangular) square root of the covariance; any
    # square root works for sampling.
    c_inv = solve_triangular(np.tril(factor[0]), np.eye(d), lower=True)
    return GaussianPosterior(mean=mean, cov=cov, cov_chol=c_inv.T)


def posterior_sample(post: GaussianPosterior, rng: np.random.Generator) -> np.ndarray:
    """Draw one weight vector ``mean + L eps`` with standard-normal eps."""
    eps = rng.standard_normal(post.mean.shape[0])
    return post.mean + post.cov_chol @ eps


def predict(w: np.ndarray, feature: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    feature = np.asarray(feature, dtype=float)
    if w.shape != feature.shape:
        raise ValueError("weight and feature dimensions differ")
    return float(w @ feature)
