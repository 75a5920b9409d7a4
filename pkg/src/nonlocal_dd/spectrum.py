"""Extreme eigenvalues and effective condition numbers of symmetric PSD matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, NumericalError, ParameterError

NULL_TOL_REL = 1e-10
DENSE_THRESHOLD = 4000


@dataclass(frozen=True)
class SpectrumReport:
    lambda_min_nonzero: float
    lambda_max: float
    null_dim: int
    method: str
    iterations: int = 0
    residual: float = 0.0

    @property
    def kappa_eff(self):
        return self.lambda_max / self.lambda_min_nonzero


def _as_operator_matrix(K):
    if sp.issparse(K):
        return K.tocsr()
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ParameterError("K", f"expected a square matrix, got shape {K.shape}")
    return K


def check_symmetric(K, rtol=1e-12):
    scale = abs(K).max() if K.shape[0] else 0.0
    asym = abs(K - K.T).max() if sp.issparse(K) else np.max(np.abs(K - K.T), initial=0.0)
    if asym > rtol * max(scale, np.finfo(float).tiny):
        raise ParameterError("K", f"matrix is not symmetric (max |K - K^T| = {asym:.3e})")


def _has_constant_null(K, rtol=1e-10):
    ones = np.ones(K.shape[0])
    scale = abs(K).max()
    return bool(np.max(np.abs(K @ ones)) <= rtol * scale * np.sqrt(K.shape[0]))


def _dense(K, null_tol_rel):
    A = K.toarray() if sp.issparse(K) else K
    w = np.linalg.eigvalsh(A)
    lam_max = w[-1]
    if not lam_max > 0:
        raise NumericalError("matrix has no positive eigenvalue")
    nonnull = w[w > null_tol_rel * lam_max]
    return SpectrumReport(float(nonnull[0]), float(lam_max), int(len(w) - len(nonnull)), "dense")


def lanczos_largest(matvec, n, seed=0, deflate=None, max_iter=None, tol=1e-12):
    """Largest eigenvalue of a symmetric operator by Lanczos with full reorthogonalisation.

    ``deflate`` is an optional unit vector kept out of the Krylov space. Returns
    ``(theta, iterations, residual_estimate)``.
    """
    max_iter = min(n, max_iter or 600)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    if deflate is not None:
        v -= deflate * (deflate @ v)
    v /= np.linalg.norm(v)
    V = np.zeros((max_iter + 1, n))
    V[0] = v
    alpha, beta = [], []
    theta, resid = 0.0, np.inf
    for k in range(max_iter):
        w = matvec(V[k])
        alpha.append(V[k] @ w)
        # full reorthogonalisation, twice for stability
        for _ in range(2):
            w -= V[:k + 1].T @ (V[:k + 1] @ w)
            if deflate is not None:
                w -= deflate * (deflate @ w)
        b = np.linalg.norm(w)
        T_vals, T_vecs = sla.eigh_tridiagonal(np.array(alpha), np.array(beta))
        theta = T_vals[-1]
        resid = abs(b * T_vecs[-1, -1])
        if resid <= tol * abs(theta) or b <= tol * abs(theta) or k + 1 == n - (deflate is not None):
            return float(theta), k + 1, float(resid)
        beta.append(b)
        V[k + 1] = w / b
    raise ConvergenceError(
        f"Lanczos did not converge in {max_iter} steps (Ritz value {theta:.6e}, residual {resid:.2e})",
        bracket=(theta - resid, theta + resid))


def _pseudo_inverse_action(K, constant_null):
    n = K.shape[0]
    A = sp.csc_matrix(K)
    if not constant_null:
        lu = spla.splu(A)
        return lu.solve
    # ground the first unknown: columns sum to zero, so row 0 holds automatically for b _|_ 1
    lu = spla.splu(A[1:, 1:].tocsc())

    def solve(b):
        x = np.zeros(n)
        x[1:] = lu.solve(b[1:])
        return x - x.mean()
    return solve


def _lanczos(K, null_tol_rel, seed):
    n = K.shape[0]
    constant_null = _has_constant_null(K)
    deflate = np.full(n, 1.0 / np.sqrt(n)) if constant_null else None
    lam_max, it1, r1 = lanczos_largest(lambda x: K @ x, n, seed, deflate)
    try:
        solve = _pseudo_inverse_action(K, constant_null)
    except RuntimeError as exc:
        raise NumericalError(f"factorisation for the smallest eigenvalue failed: {exc}") from exc
    mu, it2, r2 = lanczos_largest(solve, n, seed + 1, deflate)
    lam_min = 1.0 / mu
    if lam_min <= null_tol_rel * lam_max:
        raise NumericalError("additional null modes beyond the constant vector detected")
    return SpectrumReport(lam_min, lam_max, int(constant_null), "lanczos", it1 + it2,
                          max(r1 / lam_max, r2 / mu))


def extreme_eigenvalues(K, null_tol_rel=NULL_TOL_REL, dense_threshold=DENSE_THRESHOLD,
                        method="auto", seed=0):
    """Largest eigenvalue, smallest eigenvalue above the null threshold, and null dimension.

    The Lanczos path deflates the constant vector when ``K 1 = 0`` and finds the smallest
    nonzero eigenvalue by running Lanczos on the pseudo-inverse (a sparse LU of the
    grounded matrix), which converges in a few dozen steps.
    """
    K = _as_operator_matrix(K)
    check_symmetric(K)
    if method == "auto":
        method = "dense" if K.shape[0] <= dense_threshold else "lanczos"
    if method == "dense":
        return _dense(K, null_tol_rel)
    if method == "lanczos":
        return _lanczos(sp.csr_matrix(K), null_tol_rel, seed)
    raise ParameterError("method", f"expected auto, dense or lanczos, got {method!r}")


def rayleigh_quotient(K, u, mass_scale=1.0):
    """``u^T K u / (u^T M u)`` with ``M`` a scalar or diagonal (vector) mass."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != K.shape[0]:
        raise ParameterError("u", f"length {u.shape[0]} does not match matrix order {K.shape[0]}")
    mass = np.broadcast_to(np.asarray(mass_scale, dtype=float), u.shape)
    denom = float(np.sum(mass * u * u))
    if denom == 0.0:
        raise ParameterError("u", "Rayleigh quotient of the zero vector")
    return float(u @ (K @ u)) / denom
