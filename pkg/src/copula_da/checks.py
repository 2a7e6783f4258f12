"""Built-in invariant checks run by ``copula-da check``."""
from __future__ import annotations

import numpy as np

from .adaptation import (AdaptationProblem, euclidean_gradient, objective, retract, solve,
                         stein_divergence)
from .copula import estimate_correlation
from .marginals import fit_copula_view, normal_cdf, probit
from .regressors import ccc, nmse


def _random_spd(rng, D):
    A = rng.standard_normal((D, D))
    return A @ A.T + D * np.eye(D)


def _stein_axioms(rng):
    worst = 0.0
    for _ in range(50):
        D = int(rng.integers(1, 11))
        A, B = _random_spd(rng, D), _random_spd(rng, D)
        M = rng.standard_normal((D, D)) + 3.0 * np.eye(D)
        d = stein_divergence(A, B)
        assert d >= -1e-10 and abs(d - stein_divergence(B, A)) <= 1e-10
        assert abs(stein_divergence(A, A)) <= 1e-10
        worst = max(worst, abs(stein_divergence(M @ A @ M.T, M @ B @ M.T) - d) / max(d, 1e-300))
    assert worst <= 1e-8, worst
    return f"worst congruence rel. error {worst:.1e}"


def _gradient(rng):
    worst = 0.0
    for k in range(10):
        D = int(rng.integers(3, 7))
        p = int(rng.integers(1, min(3, D - 1) + 1))
        R_T = estimate_correlation(rng.standard_normal((4 * D + 10, D)))
        R_S = estimate_correlation(rng.standard_normal((4 * D + 10, D)))
        Z = rng.standard_normal((25, D))
        prob = AdaptationProblem(R_T, R_S, Z, rng.standard_normal(25), lam=float(k % 2),
                                 sigma_x=1.5, sigma_y=1.0)
        W = retract(rng.standard_normal((D, p)), 0.0)
        g = euclidean_gradient(prob, W)
        fd = np.zeros_like(W)
        for i in range(D):
            for j in range(p):
                E = np.zeros_like(W)
                E[i, j] = 1e-6
                fd[i, j] = (objective(prob, W + E) - objective(prob, W - E)) / 2e-6
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
    assert worst <= 1e-5, worst
    return f"worst relative error {worst:.1e}"


def _solver(rng):
    D, p = 5, 2
    Z = rng.standard_normal((40, D))
    prob = AdaptationProblem(estimate_correlation(rng.standard_normal((60, D))),
                             estimate_correlation(rng.standard_normal((60, D))),
                             Z, Z[:, 0] + 0.1 * rng.standard_normal(40), lam=1e-3)
    rep = solve(prob, p)
    trace = np.asarray(rep.objective_trace)
    assert np.all(np.diff(trace) <= 1e-12)
    err = np.abs(rep.W_star.T @ rep.W_star - np.eye(p)).max()
    assert err <= 1e-10, err
    return f"{rep.iterations} iterations, orthonormality error {err:.1e}"


def _probit(rng):
    u = np.linspace(1e-9, 1 - 1e-9, 100_001)
    err = np.abs(normal_cdf(probit(u)) - u).max()
    assert err <= 1e-12, err
    return f"max round-trip error {err:.1e}"


def _rank_invariance(rng):
    X = rng.standard_normal((200, 3))
    Y = np.column_stack([np.exp(X[:, 0]), X[:, 1] ** 3, 2.0 * X[:, 2] + 5.0])
    assert np.array_equal(fit_copula_view(X).Z, fit_copula_view(Y).Z)
    return "Z unchanged under exp, cube and affine maps"


def _metrics(rng):
    t = rng.standard_normal(100)
    t = (t - t.mean()) / t.std()
    assert abs(ccc(t, t) - 1.0) <= 1e-12
    assert abs(ccc(t + 1.0, t) - 2.0 / 3.0) <= 1e-12
    assert nmse(t, t) == 0.0
    assert abs(nmse(np.full_like(t, t.mean()), t) - 1.0) <= 1e-12
    return "CCC and NMSE analytic cases"


CHECKS = {
    "stein divergence axioms": _stein_axioms,
    "analytic gradient vs finite differences": _gradient,
    "solver descent and orthonormality": _solver,
    "probit / normal_cdf round trip": _probit,
    "copula transform rank invariance": _rank_invariance,
    "metric identities": _metrics,
}


def run_checks(seed: int = 0) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS.items():
        try:
            out.append((name, True, fn(rng)))
        except AssertionError as exc:
            out.append((name, False, f"failed: {exc}"))
    return out
