"""Synthetic domain-shift datasets for tests and quick experiments."""
from __future__ import annotations

import numpy as np

from .datasets import DomainSplit

__all__ = ["make_covariate_shift", "iid_halves"]

# strictly increasing per-column distortions applied to the latent Gaussian
_SOURCE_MAPS = (
    lambda z: np.exp(0.5 * z),
    lambda z: z ** 3 + z,
    lambda z: 4.0 * z + 10.0,
    lambda z: np.arctan(z),
    lambda z: z,
)
_TARGET_MAPS = (
    lambda z: 2.0 * z - 1.0,
    lambda z: np.exp(z),
    lambda z: np.sinh(z),
    lambda z: 0.1 * z + 3.0,
    lambda z: z ** 3,
)


def _latent_corr(rng, dim):
    A = rng.standard_normal((dim, dim))
    C = A @ A.T + dim * np.eye(dim)
    d = np.sqrt(np.diag(C))
    return C / np.outer(d, d)


def make_covariate_shift(n_source: int = 500, n_target: int = 500, dim: int = 5,
                         noise: float = 0.2, nuisance_rho: float = 0.8,
                         seed: int = 0) -> DomainSplit:
    """
    Source and target share ``p(y | latent)`` but observe the latent Gaussian
    through different monotone per-feature maps, and the target couples the
    label-irrelevant features (index >= 2) more strongly than the source.
    """
    if dim < 3:
        raise ValueError("dim must be at least 3")
    rng = np.random.default_rng(seed)
    R_S = _latent_corr(rng, dim)
    R_T = R_S.copy()
    for i in range(2, dim):
        for j in range(2, dim):
            if i != j:
                R_T[i, j] = nuisance_rho
    R_T[:2, 2:] = R_T[2:, :2] = 0.0
    R_S[:2, 2:] = R_S[2:, :2] = 0.0

    def draw(R, n, maps):
        z = rng.standard_normal((n, dim)) @ np.linalg.cholesky(R).T
        y = np.sin(1.5 * z[:, 0]) + 0.8 * z[:, 1] + noise * rng.standard_normal(n)
        x = np.column_stack([maps[j % len(maps)](z[:, j]) for j in range(dim)])
        return x, y

    X_S, y_S = draw(R_S, n_source, _SOURCE_MAPS)
    X_T, y_T = draw(R_T, n_target, _TARGET_MAPS)
    return DomainSplit(X_S, y_S, X_T, y_T,
                       feature_names=[f"x{j}" for j in range(dim)], target_name="y")


def iid_halves(X, y, seed: int = 0) -> DomainSplit:
    """Random half/half split of one dataset into source and target."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    perm = np.random.default_rng(seed).permutation(len(y))
    half = len(y) // 2
    s, t = np.sort(perm[:half]), np.sort(perm[half:])
    return DomainSplit(X[s], y[s], X[t], y[t],
                       feature_names=[f"x{j}" for j in range(X.shape[1])], target_name="y")
