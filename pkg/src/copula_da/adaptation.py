"""
Copula-space domain adaptation.

Source and target inputs are mapped to normal scores with their own
empirical marginals, then projected onto a shared subspace ``W`` (orthonormal
columns) chosen to minimize

    F(W) = S(W' R_T W, W' R_S W) - lam * trace(K_y L K_{Z_S W} L)

where ``S`` is the Stein (Jensen-Bregman log-det) divergence between the
projected correlation matrices and the trace term is the unnormalized
quadratic mutual information between projected source features and labels.
``F`` is minimized by Riemannian gradient descent on the Stiefel manifold.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import pdist

from .errors import InvalidInputError, NumericalError
from .marginals import fit_copula_view, normal_scores

__all__ = [
    "SPD_RIDGE",
    "stein_divergence",
    "qmi",
    "rbf_kernel",
    "median_bandwidth",
    "AdaptationProblem",
    "SolverOptions",
    "SolverReport",
    "objective",
    "objective_terms",
    "euclidean_gradient",
    "riemannian_gradient",
    "retract",
    "initial_projection",
    "solve",
    "CopulaAdapter",
    "ct_transform",
    "coral_matrix",
    "coral_transform",
]

logger = logging.getLogger(__name__)

SPD_RIDGE = 1e-10


def _logdet_chol(A: np.ndarray, what: str):
    try:
        factor = cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{what} is not positive definite") from exc
    return 2.0 * np.sum(np.log(np.diag(factor[0]))), factor


def _stein_one_sided(A: np.ndarray, B: np.ndarray) -> float:
    # eigenvalues of L^{-1} B L^{-T} with A = L L'
    try:
        L = cholesky(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("matrix is not symmetric positive definite") from exc
    C = solve_triangular(L, solve_triangular(L, B, lower=True).T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (C + C.T))
    if lam[0] <= 0.0:
        raise InvalidInputError("matrix is not symmetric positive definite")
    # log((1 + l) / 2) - log(l) / 2 = log1p((l - 1)^2 / (4 l)) / 2, each term >= 0
    return float(np.sum(0.5 * np.log1p((lam - 1.0) ** 2 / (4.0 * lam))))


def stein_divergence(A, B) -> float:
    """
    Stein divergence ``log det((A+B)/2) - (log det A + log det B) / 2``.

    Symmetric, non-negative, zero iff ``A == B``, and invariant under
    congruence ``A -> M A M'`` for invertible ``M``.

    Evaluated from the generalized eigenvalues of ``(B, A)`` as a sum of
    non-negative terms rather than as a difference of log-determinants, which
    cancels badly when the inputs are ill-conditioned; the two argument
    orders are averaged so the result is exactly symmetric.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"need two square matrices of equal size, got {A.shape} and {B.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise InvalidInputError("matrices must be finite")
    return 0.5 * (_stein_one_sided(A, B) + _stein_one_sided(B, A))


def _sq_dists(T: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", T, T)
    D2 = sq[:, None] + sq[None, :] - 2.0 * (T @ T.T)
    np.maximum(D2, 0.0, out=D2)
    np.fill_diagonal(D2, 0.0)
    return D2


def rbf_kernel(T, sigma: float) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    return np.exp(-_sq_dists(T) / (2.0 * sigma * sigma))


def _center_kernel(K: np.ndarray) -> np.ndarray:
    # L K L with L = I - ee'/n
    row = K.mean(axis=0)
    return K - row[None, :] - row[:, None] + row.mean()


def median_bandwidth(T) -> float:
    """Median pairwise Euclidean distance between rows; 1.0 if that is zero."""
    T = np.asarray(T, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    if T.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(T)))
    return med if med > 0.0 else 1.0


def qmi(T, y, sigma_x: float, sigma_y: float) -> float:
    """Empirical quadratic mutual information ``trace(K_T L K_y L) / n^2``."""
    T = np.asarray(T, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n < 2 or T.shape[0] != n:
        raise InvalidInputError("qmi needs at least 2 paired samples")
    K_t = rbf_kernel(T, sigma_x)
    G = _center_kernel(rbf_kernel(y, sigma_y))
    return float(np.sum(K_t * G) / (n * n))


@dataclass(frozen=True, eq=False)
class AdaptationProblem:
    """Data defining the objective ``F(W)``. Bandwidths ``None`` mean "not chosen yet"."""

    R_T: np.ndarray
    R_S: np.ndarray
    Z_S: np.ndarray
    y_S: np.ndarray
    lam: float = 0.0
    sigma_x: float | None = None
    sigma_y: float | None = None

    def __post_init__(self):
        D = self.R_T.shape[0]
        if self.R_T.shape != (D, D) or self.R_S.shape != (D, D):
            raise InvalidInputError("R_T and R_S must be square and of equal size")
        if self.Z_S.ndim != 2 or self.Z_S.shape[1] != D:
            raise InvalidInputError(f"Z_S must have {D} columns")
        if self.y_S.shape != (self.Z_S.shape[0],):
            raise InvalidInputError("y_S must have one entry per row of Z_S")
        if not self.lam >= 0.0:
            raise InvalidInputError("lam must be non-negative")
        for name in ("sigma_x", "sigma_y"):
            value = getattr(self, name)
            if value is not None and not value > 0.0:
                raise InvalidInputError(f"{name} must be positive")

    @property
    def dim(self) -> int:
        return self.R_T.shape[0]

    @cached_property
    def R_mean(self) -> np.ndarray:
        return 0.5 * (self.R_T + self.R_S)

    @cached_property
    def centered_label_kernel(self) -> np.ndarray:
        return _center_kernel(rbf_kernel(self.y_S, self.sigma_y))

    def with_bandwidths(self, W) -> "AdaptationProblem":
        """Fill unset bandwidths with the median heuristic evaluated at ``W``."""
        sigma_x = self.sigma_x
        sigma_y = self.sigma_y
        if sigma_x is None:
            sigma_x = median_bandwidth(self.Z_S @ W)
        if sigma_y is None:
            sigma_y = median_bandwidth(self.y_S)
        return replace(self, sigma_x=sigma_x, sigma_y=sigma_y)


def _require_bandwidths(prob: AdaptationProblem):
    if prob.lam > 0.0 and (prob.sigma_x is None or prob.sigma_y is None):
        raise InvalidInputError("kernel bandwidths must be set when lam > 0; see with_bandwidths")


def _projected_logdet(C: np.ndarray, W: np.ndarray, what: str):
    p = W.shape[1]
    M = W.T @ C @ W
    M = 0.5 * (M + M.T) + SPD_RIDGE * np.eye(p)
    return _logdet_chol(M, f"projected {what} matrix")


def objective_terms(prob: AdaptationProblem, W) -> tuple[float, float]:
    """Return ``(stein, trace)`` so that ``objective = stein - lam * trace``."""
    W = np.asarray(W, dtype=float)
    ld_m, _ = _projected_logdet(prob.R_mean, W, "mean correlation")
    ld_t, _ = _projected_logdet(prob.R_T, W, "target correlation")
    ld_s, _ = _projected_logdet(prob.R_S, W, "source correlation")
    stein = float(ld_m - 0.5 * ld_t - 0.5 * ld_s)
    if prob.lam == 0.0:
        return stein, 0.0
    _require_bandwidths(prob)
    K = rbf_kernel(prob.Z_S @ W, prob.sigma_x)
    return stein, float(np.sum(K * prob.centered_label_kernel))


def objective(prob: AdaptationProblem, W) -> float:
    stein, trace = objective_terms(prob, W)
    return stein - prob.lam * trace


def euclidean_gradient(prob: AdaptationProblem, W) -> np.ndarray:
    """Analytic gradient of :func:`objective` with respect to the entries of ``W``."""
    W = np.asarray(W, dtype=float)
    grad = np.zeros_like(W)
    for C, weight, what in ((prob.R_mean, 1.0, "mean correlation"),
                            (prob.R_T, -0.5, "target correlation"),
                            (prob.R_S, -0.5, "source correlation")):
        # d/dW log det(W'CW + rI) = 2 C W (W'CW + rI)^{-1}
        _, factor = _projected_logdet(C, W, what)
        CW = C @ W
        grad += weight * 2.0 * cho_solve(factor, CW.T).T
    if prob.lam > 0.0:
        _require_bandwidths(prob)
        T = prob.Z_S @ W
        K = rbf_kernel(T, prob.sigma_x)
        P = K * prob.centered_label_kernel
        # sum_ij P_ij (z_i - z_j)(z_i - z_j)' W = 2 Z' (diag(P 1) - P) Z W
        lap_T = P.sum(axis=1)[:, None] * T - P @ T
        grad += prob.lam * (2.0 / prob.sigma_x ** 2) * (prob.Z_S.T @ lap_T)
    return grad


def riemannian_gradient(W: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Project a Euclidean gradient onto the tangent space of the Stiefel manifold at ``W``."""
    WtG = W.T @ G
    return G - W @ (0.5 * (WtG + WtG.T))


def retract(W: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """QR retraction of ``W + xi`` with the sign of R's diagonal fixed positive."""
    Q, R = np.linalg.qr(W + xi)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    return Q * signs


def _sign_fix(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    for j in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, j]) > 1e-12)
        if nz.size and V[nz[0], j] < 0.0:
            V[:, j] = -V[:, j]
    return V


def initial_projection(R_T, R_S, p: int, seed: int = 0) -> np.ndarray:
    """Top-``p`` eigenvectors of ``(R_T + R_S) / 2``; falls back to a seeded random frame."""
    C = 0.5 * (np.asarray(R_T, dtype=float) + np.asarray(R_S, dtype=float))
    D = C.shape[0]
    if not 1 <= p <= D:
        raise InvalidInputError(f"p must lie in [1, {D}], got {p}")
    try:
        w, V = np.linalg.eigh(C)
        if not np.all(np.isfinite(w)):
            raise np.linalg.LinAlgError("non-finite eigenvalues")
        order = np.argsort(-w, kind="stable")
        return _sign_fix(V[:, order[:p]])
    except np.linalg.LinAlgError:
        logger.warning("eigen-initialization failed, using a random orthonormal frame")
        G = np.random.default_rng(seed).standard_normal((D, p))
        return retract(G, np.zeros_like(G))


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 500
    armijo: float = 1e-4
    backtrack: float = 0.5
    tol: float = 1e-8
    grad_tol: float = 1e-10
    max_backtracks: int = 60
    escape_probes: int = 4
    escape_step: float = 1e-2
    seed: int = 0


@dataclass
class SolverReport:
    W_star: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    reason: str = ""
    problem: AdaptationProblem | None = None

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _escape(prob, W, f, opts, rng):
    """Probe random tangent directions from a first-order stationary point.

    Returns an improved ``(W, f)`` if one probe decreases the objective,
    otherwise ``None``.
    """
    for _ in range(opts.escape_probes):
        xi = riemannian_gradient(W, rng.standard_normal(W.shape))
        norm = np.linalg.norm(xi)
        if norm == 0.0:
            continue
        xi *= opts.escape_step / norm
        for direction in (xi, -xi):
            W_new = retract(W, direction)
            f_new = objective(prob, W_new)
            if np.isfinite(f_new) and f_new < f - opts.tol * max(abs(f), 1.0):
                return W_new, f_new
    return None


def solve(prob: AdaptationProblem, p: int, opts: SolverOptions | None = None,
          W0=None) -> SolverReport:
    """
    Minimize the adaptation objective over ``D x p`` matrices with orthonormal columns.

    Riemannian steepest descent with a QR retraction and Armijo backtracking.
    Unset kernel bandwidths are fixed by the median heuristic at the initial
    point and kept for the whole run. Stops when the relative decrease of the
    objective falls below ``opts.tol`` or after ``opts.max_iters`` iterations.
    """
    opts = opts or SolverOptions()
    if W0 is None:
        W = initial_projection(prob.R_T, prob.R_S, p, seed=opts.seed)
    else:
        W = retract(np.asarray(W0, dtype=float), 0.0)
        if W.shape != (prob.dim, p):
            raise InvalidInputError(f"W0 must have shape ({prob.dim}, {p})")
    prob = prob.with_bandwidths(W)
    rng = np.random.default_rng(opts.seed)

    f = objective(prob, W)
    if not np.isfinite(f):
        raise NumericalError(f"objective is not finite at the initial point (value {f})")
    report = SolverReport(W_star=W, objective_trace=[f], problem=prob)
    step = None
    escapes = 0

    for it in range(1, opts.max_iters + 1):
        report.iterations = it
        rgrad = riemannian_gradient(W, euclidean_gradient(prob, W))
        gnorm2 = float(np.sum(rgrad * rgrad))
        if not np.isfinite(gnorm2):
            raise NumericalError(f"non-finite gradient at iteration {it}")
        if gnorm2 <= opts.grad_tol ** 2:
            escaped = _escape(prob, W, f, opts, rng) if escapes < 3 else None
            if escaped is None:
                report.converged, report.reason = True, "gradient norm below tolerance"
                break
            escapes += 1
            W, f = escaped
            report.objective_trace.append(f)
            step = None
            continue

        t = 1.0 / np.sqrt(gnorm2) if step is None else 2.0 * step
        accepted = False
        for _ in range(opts.max_backtracks):
            W_new = retract(W, -t * rgrad)
            f_new = objective(prob, W_new)
            if not np.isfinite(f_new):
                raise NumericalError(
                    f"objective became non-finite at iteration {it} (step {t:.3g})")
            if f_new <= f - opts.armijo * t * gnorm2:
                accepted = True
                break
            t *= opts.backtrack
        if not accepted:
            report.converged, report.reason = True, "line search could not decrease the objective"
            break

        decrease = f - f_new
        W, f, step = W_new, f_new, t
        report.objective_trace.append(f)
        if decrease < opts.tol * max(abs(f), 1.0):
            report.converged, report.reason = True, "relative decrease below tolerance"
            break
    else:
        report.reason = "iteration limit reached"

    report.W_star = W
    return report


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


class CopulaAdapter:
    """Domain-specific maps ``phi_S(x) = W' probit(F_S(x))`` and ``phi_T(x) = W' probit(F_T(x))``.

    With ``p=None`` and ``lam`` ignored, the projection is the identity (the
    plain copula transform).
    """

    def __init__(self, p: int | None = None, lam: float = 0.0,
                 options: SolverOptions | None = None,
                 qmi_samples: int | None = None, seed: int = 0):
        self.p = p
        self.lam = lam
        self.options = options or SolverOptions()
        self.qmi_samples = qmi_samples
        self.seed = seed

    def fit(self, X_S, y_S, X_T) -> "CopulaAdapter":
        source = fit_copula_view(_as_matrix(X_S))
        target = fit_copula_view(_as_matrix(X_T))
        self.source_marginals = source.marginals
        self.target_marginals = target.marginals
        self.R_S, self.R_T = source.R, target.R
        D = source.dim
        if self.p is None:
            self.W = np.eye(D)
            self.report = None
            return self

        Z_S = source.Z
        y_S = np.asarray(y_S, dtype=float).ravel()
        if self.qmi_samples is not None and Z_S.shape[0] > self.qmi_samples:
            idx = np.sort(np.random.default_rng(self.seed).choice(
                Z_S.shape[0], self.qmi_samples, replace=False))
            Z_S, y_S = Z_S[idx], y_S[idx]
        prob = AdaptationProblem(R_T=self.R_T, R_S=self.R_S, Z_S=Z_S, y_S=y_S, lam=self.lam)
        self.report = solve(prob, self.p, self.options)
        self.W = self.report.W_star
        return self

    def transform_source(self, X) -> np.ndarray:
        return normal_scores(_as_matrix(X), self.source_marginals) @ self.W

    def transform_target(self, X) -> np.ndarray:
        return normal_scores(_as_matrix(X), self.target_marginals) @ self.W


def ct_transform(X_S, X_T) -> tuple[np.ndarray, np.ndarray]:
    """Copula transform of each domain with its own marginals (identity projection)."""
    return fit_copula_view(_as_matrix(X_S)).Z, fit_copula_view(_as_matrix(X_T)).Z


def _spd_power(C: np.ndarray, power: float) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    if w[0] <= 0.0:
        raise NumericalError("covariance is not positive definite; increase eps")
    return (V * w ** power) @ V.T


def coral_matrix(X_S, X_T, eps: float = 1e-6) -> np.ndarray:
    """Whiten-then-recolor map ``C_S^{-1/2} C_T^{1/2}`` (acting on row vectors)."""
    X_S, X_T = _as_matrix(X_S), _as_matrix(X_T)
    if X_S.shape[0] < 2 or X_T.shape[0] < 2:
        raise InvalidInputError("CORAL needs at least 2 samples per domain")
    if X_S.shape[1] != X_T.shape[1]:
        raise InvalidInputError("source and target must have the same number of columns")
    D = X_S.shape[1]
    C_S = np.cov(X_S, rowvar=False, bias=True).reshape(D, D) + eps * np.eye(D)
    C_T = np.cov(X_T, rowvar=False, bias=True).reshape(D, D) + eps * np.eye(D)
    return _spd_power(C_S, -0.5) @ _spd_power(C_T, 0.5)


def coral_transform(X_S, X_T, eps: float = 1e-6) -> np.ndarray:
    """Centered source features recolored to the target covariance."""
    X_S = _as_matrix(X_S)
    return (X_S - X_S.mean(axis=0)) @ coral_matrix(X_S, X_T, eps)
