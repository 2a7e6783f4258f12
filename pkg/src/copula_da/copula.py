"""Gaussian copula: regularized correlation, density, and copula regression (GCR)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InvalidInputError, NumericalError
from .marginals import EmpiricalMarginal, fit_marginal, normal_cdf, normal_scores, probit

__all__ = [
    "EIG_FLOOR",
    "estimate_correlation",
    "gaussian_copula_density",
    "GcrModel",
    "gcr_fit",
    "gcr_predict",
]

EIG_FLOOR = 1e-6


def _pearson(Z: np.ndarray) -> np.ndarray:
    Zc = Z - Z.mean(axis=0)
    cov = Zc.T @ Zc
    scale = np.sqrt(np.diag(cov))
    degenerate = scale == 0.0
    scale[degenerate] = 1.0
    C = cov / np.outer(scale, scale)
    # zero-variance columns are treated as uncorrelated with everything
    C[degenerate, :] = 0.0
    C[:, degenerate] = 0.0
    np.fill_diagonal(C, 1.0)
    return C


def _floor_and_rescale(C: np.ndarray, eps: float) -> np.ndarray:
    w, V = np.linalg.eigh(C)
    floor = eps
    for _ in range(50):
        A = (V * np.maximum(w, floor)) @ V.T
        d = np.sqrt(np.diag(A))
        R = A / np.outer(d, d)
        R = 0.5 * (R + R.T)
        np.fill_diagonal(R, 1.0)
        if np.linalg.eigvalsh(R)[0] >= eps:
            return R
        # rescaling to unit diagonal shrinks the floored eigenvalues; raise the floor
        floor = max(floor, eps * d.max() ** 2) * (1.0 + 1e-6)
    raise NumericalError("could not regularize correlation matrix to the eigenvalue floor")


def estimate_correlation(Z, eps: float = EIG_FLOOR) -> np.ndarray:
    """
    Pearson correlation of the columns of ``Z`` projected onto the set of
    correlation matrices with smallest eigenvalue at least ``eps``.

    The sample correlation is symmetrized, its eigenvalues are floored at
    ``eps`` and the result rescaled to unit diagonal. Matrices that already
    satisfy the floor are returned unchanged apart from symmetrization.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] < 2:
        raise InvalidInputError("correlation needs at least 2 rows")
    if not np.all(np.isfinite(Z)):
        raise InvalidInputError("correlation input must be finite")
    C = _pearson(Z)
    C = 0.5 * (C + C.T)
    if C.shape[0] == 1:
        return C
    if np.linalg.eigvalsh(C)[0] >= eps:
        return C
    return _floor_and_rescale(C, eps)


def gaussian_copula_density(u, R) -> float:
    """Gaussian copula density ``|R|^{-1/2} exp(-tau' (R^{-1} - I) tau / 2)``, ``tau = probit(u)``."""
    u = np.asarray(u, dtype=float).ravel()
    R = np.asarray(R, dtype=float)
    if R.shape != (u.size, u.size):
        raise InvalidInputError(f"R has shape {R.shape} but u has {u.size} entries")
    if not np.all((u > 0.0) & (u < 1.0)):
        raise InvalidInputError("copula density needs u strictly inside (0, 1)")
    tau = probit(u)
    try:
        factor = cho_factor(R, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("R is not positive definite") from exc
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    quad = tau @ cho_solve(factor, tau) - tau @ tau
    return float(np.exp(-0.5 * logdet - 0.5 * quad))


@dataclass(frozen=True, eq=False)
class GcrModel:
    """Gaussian copula regression fitted on ``(X, y)``.

    ``joint_R`` is the correlation of ``[z_1 .. z_D, w]`` with ``w`` the
    normal score of ``y``.
    """

    joint_R: np.ndarray
    input_marginals: tuple
    output_marginal: EmpiricalMarginal

    @property
    def dim(self) -> int:
        return len(self.input_marginals)

    @property
    def weights(self) -> np.ndarray:
        """Regression coefficients of ``w`` on ``z``: ``R_zz^{-1} R_zw``."""
        D = self.dim
        R_zz = self.joint_R[:D, :D]
        R_zw = self.joint_R[:D, D]
        return cho_solve(cho_factor(R_zz, lower=True), R_zw)


def gcr_fit(X, y) -> GcrModel:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise InvalidInputError(f"X has {X.shape[0]} rows but y has {y.size} entries")
    if y.size < 2:
        raise InvalidInputError("GCR needs at least 2 training samples")
    input_marginals = tuple(fit_marginal(X[:, j]) for j in range(X.shape[1]))
    output_marginal = fit_marginal(y)
    Z = normal_scores(X, input_marginals)
    w = probit(output_marginal.cdf(y))
    joint_R = estimate_correlation(np.column_stack([Z, w]))
    return GcrModel(joint_R=joint_R, input_marginals=input_marginals,
                    output_marginal=output_marginal)


def gcr_predict(model: GcrModel, X) -> np.ndarray:
    """
    Predict with the conditional mean of the Gaussian copula in normal-score
    space, mapped back through the empirical quantile function of ``y``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != model.dim:
        raise InvalidInputError(f"model expects {model.dim} columns, got {X.shape[1]}")
    Z = normal_scores(X, model.input_marginals)
    w_hat = Z @ model.weights
    v = np.clip(normal_cdf(w_hat), np.finfo(float).tiny, 1.0 - np.finfo(float).eps)
    return model.output_marginal.inverse_cdf(v)
