"""Gaussian process regression (predictive mean only) and evaluation metrics."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist

from .errors import InvalidInputError, NumericalError

__all__ = [
    "GpHyper",
    "GprModel",
    "gpr_fit",
    "gpr_predict",
    "gpr_grid",
    "nmse",
    "ccc",
]

logger = logging.getLogger(__name__)

_JITTER_LEVELS = (1e-8, 1e-6, 1e-4)


@dataclass(frozen=True)
class GpHyper:
    lengthscale: float
    signal_var: float
    noise_var: float

    def __post_init__(self):
        for name in ("lengthscale", "signal_var", "noise_var"):
            if not getattr(self, name) > 0.0:
                raise InvalidInputError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class GprModel:
    X_train: np.ndarray
    alpha: np.ndarray
    hyper: GpHyper
    y_offset: float = 0.0
    jitter: float = 0.0

    @property
    def lengthscale(self) -> float:
        return self.hyper.lengthscale

    @property
    def signal_var(self) -> float:
        return self.hyper.signal_var

    @property
    def noise_var(self) -> float:
        return self.hyper.noise_var


def _rbf(A: np.ndarray, B: np.ndarray, hyper: GpHyper) -> np.ndarray:
    d2 = cdist(A, B, "sqeuclidean")
    return hyper.signal_var * np.exp(-0.5 * d2 / hyper.lengthscale ** 2)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def gpr_fit(X, y, hyper: GpHyper, center: bool = False) -> GprModel:
    """
    Solve ``(K + noise_var I) alpha = y`` by Cholesky.

    Training rows are sorted lexicographically first, so the fitted model and
    its predictions do not depend on the order of the training set. If the
    factorization fails, a jitter of 1e-8, 1e-6 then 1e-4 times
    ``signal_var`` is added to the diagonal before giving up.

    With ``center=True`` the prior mean is the training mean of ``y``
    instead of zero.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size or y.size < 1:
        raise InvalidInputError("gpr_fit needs at least one (x, y) pair with matching sizes")
    order = np.lexsort(np.column_stack([X, y]).T[::-1])
    X, y = X[order], y[order]
    offset = float(y.mean()) if center else 0.0

    K = _rbf(X, X, hyper)
    K[np.diag_indices_from(K)] += hyper.noise_var
    jitter = 0.0
    for level in (0.0,) + _JITTER_LEVELS:
        jitter = level * hyper.signal_var
        try:
            factor = cho_factor(K + jitter * np.eye(len(y)), lower=True)
            break
        except np.linalg.LinAlgError:
            logger.debug("Cholesky failed with jitter %g", jitter)
    else:
        raise NumericalError(
            f"kernel matrix not positive definite even with jitter {jitter:g}")
    alpha = cho_solve(factor, y - offset)
    return GprModel(X_train=X, alpha=alpha, hyper=hyper, y_offset=offset, jitter=jitter)


def gpr_predict(model: GprModel, X) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[1] != model.X_train.shape[1]:
        raise InvalidInputError(
            f"model expects {model.X_train.shape[1]} columns, got {X.shape[1]}")
    return _rbf(X, model.X_train, model.hyper) @ model.alpha + model.y_offset


def gpr_grid(X, y) -> list[GpHyper]:
    """Hyperparameter candidates: lengthscale in median distance x {0.5, 1, 2},
    noise in var(y) x {1e-4, 1e-2, 1e-1}; signal variance var(y)."""
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    med = float(np.median(pdist(X))) if X.shape[0] > 1 else 1.0
    med = med if med > 0.0 else 1.0
    var = float(np.var(y))
    var = var if var > 0.0 else 1.0
    return [GpHyper(lengthscale=med * a, signal_var=var, noise_var=var * b)
            for a, b in itertools.product((0.5, 1.0, 2.0), (1e-4, 1e-2, 1e-1))]


def _paired(pred, truth):
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise InvalidInputError("pred and truth must have the same length")
    if pred.size < 2:
        raise InvalidInputError("metrics need at least 2 values")
    return pred, truth


def nmse(pred, truth) -> float:
    """Mean squared error divided by the (population) variance of ``truth``."""
    pred, truth = _paired(pred, truth)
    var = np.var(truth)
    if var == 0.0:
        raise InvalidInputError("NMSE is undefined for constant ground truth")
    return float(np.mean((pred - truth) ** 2) / var)


def ccc(pred, truth) -> float:
    """Concordance correlation coefficient with population moments."""
    pred, truth = _paired(pred, truth)
    mp, mt = pred.mean(), truth.mean()
    cov = np.mean((pred - mp) * (truth - mt))
    denom = np.var(pred) + np.var(truth) + (mp - mt) ** 2
    if denom == 0.0:
        raise InvalidInputError("CCC is undefined when both inputs are the same constant")
    return float(2.0 * cov / denom)
