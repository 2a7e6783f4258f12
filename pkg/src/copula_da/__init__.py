"""Unsupervised domain adaptation for regression in Gaussian-copula space."""
from .adaptation import (AdaptationProblem, CopulaAdapter, SolverOptions, SolverReport,
                         coral_transform, ct_transform, euclidean_gradient, objective, qmi,
                         solve, stein_divergence)
from .copula import (GcrModel, estimate_correlation, gaussian_copula_density, gcr_fit,
                     gcr_predict)
from .errors import DatasetError, InvalidInputError, NumericalError
from .marginals import (CopulaView, EmpiricalMarginal, fit_marginal, normal_cdf, probit,
                        to_copula_space)
from .regressors import GpHyper, GprModel, ccc, gpr_fit, gpr_predict, nmse

__version__ = "0.1.0"

__all__ = [
    "AdaptationProblem", "CopulaAdapter", "SolverOptions", "SolverReport",
    "coral_transform", "ct_transform", "euclidean_gradient", "objective", "qmi",
    "solve", "stein_divergence",
    "GcrModel", "estimate_correlation", "gaussian_copula_density", "gcr_fit", "gcr_predict",
    "DatasetError", "InvalidInputError", "NumericalError",
    "CopulaView", "EmpiricalMarginal", "fit_marginal", "normal_cdf", "probit",
    "to_copula_space",
    "GpHyper", "GprModel", "ccc", "gpr_fit", "gpr_predict", "nmse",
]
