"""Two subdomains separated by a thick interface band, and the nonlocal Schur complement.

Unknowns split into ``I1`` (left), ``I2`` (right) and ``IGamma`` (the band around
``x1 = 1/2``). Because the band is at least one horizon thick, ``I1`` and ``I2`` never
interact and the stiffness matrix takes a block-arrowhead form. The Schur complement
onto the band is the sum of one contribution per subdomain.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ParameterError, PartitionError, SingularBlockError

CENTER = 0.5
DENSE_SOLVE_LIMIT = 4000


@dataclass(frozen=True)
class Partition:
    I1: np.ndarray
    I2: np.ndarray
    IGamma: np.ndarray
    w_actual: float
    center: float = CENTER

    @property
    def n_gamma(self):
        return len(self.IGamma)

    @property
    def order(self):
        return len(self.I1) + len(self.I2) + len(self.IGamma)


def _classify(x, w):
    tol = 1e-9 * max(w, 1.0)
    gamma = np.abs(x - CENTER) <= 0.5 * w + tol
    left = (x < CENTER) & ~gamma
    return left, gamma


def partition_two_domain(grid, delta):
    """Split interior elements by the first coordinate of their node.

    Cell layout: the band half-width ``w/2`` uses ``w = 2h ceil(delta / 2h)``, so the band
    is a whole number of elements on each side of the centre. Vertex layout: the band is
    the closed nodal set ``|x1 - 1/2| <= w/2`` starting from ``w = delta``, widened node by
    node until the left and right element supports are at least ``delta`` apart.
    ``w_actual`` is the x1-extent of the band elements.
    """
    if grid.dim not in (1, 2, 3):
        raise ParameterError("dim", f"unsupported dimension {grid.dim}")
    if not delta > 0:
        raise ParameterError("delta", f"must be positive, got {delta}")
    ids = grid.interior_ids()
    m = grid.multi_index(ids)[:, 0]
    x = grid.nodes[m]
    lo, hi = grid.lo[m], grid.hi[m]
    h = grid.h
    if grid.layout == "cell":
        w = 2 * h * np.ceil(delta / (2 * h) - 1e-9)
        left, gamma = _classify(x, w)
    else:
        candidates = np.unique(np.round(2 * np.abs(x - CENTER), 12))
        candidates = candidates[candidates >= delta * (1 - 1e-9)]
        for w in np.concatenate([[delta], candidates]):
            left, gamma = _classify(x, w)
            right = ~left & ~gamma
            if not left.any() or not right.any():
                break
            if lo[right].min() - hi[left].max() >= delta * (1 - 1e-9):
                break
    right = ~left & ~gamma
    if not left.any() or not right.any():
        raise ParameterError("delta", f"interface band (width {w:.4g}) swallows a subdomain")
    w_actual = float(hi[gamma].max() - lo[gamma].min())
    order = np.arange(len(ids))
    return Partition(order[left], order[right], order[gamma], w_actual)


@dataclass
class ArrowheadBlocks:
    K11: sp.csr_matrix
    K22: sp.csr_matrix
    KGG: sp.csr_matrix
    K1G: sp.csr_matrix
    K2G: sp.csr_matrix
    KGG1: sp.csr_matrix
    KGG2: sp.csr_matrix
    partition: Partition

    @property
    def permutation(self):
        p = self.partition
        return np.concatenate([p.I1, p.I2, p.IGamma])

    def reassemble(self):
        """Arrowhead matrix mapped back to the original ordering."""
        Z = sp.csr_matrix((self.K11.shape[0], self.K22.shape[0]))
        A = sp.bmat([[self.K11, Z, self.K1G],
                     [Z.T, self.K22, self.K2G],
                     [self.K1G.T, self.K2G.T, self.KGG]], format="csr")
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(len(inv))
        return A[inv][:, inv].tocsr()

    def side(self, i):
        if i == 1:
            return self.K11, self.K1G, self.KGG1
        if i == 2:
            return self.K22, self.K2G, self.KGG2
        raise ParameterError("side", f"expected 1 or 2, got {i!r}")


def split_blocks(K, p):
    """Extract the arrowhead blocks and split ``K_GG`` into per-subdomain parts.

    Gamma-Gamma couplings are shared half and half. The part of a band diagonal entry
    that comes from interactions with subdomain ``i`` goes wholly to ``K_GG^(i)``;
    anything left over (collar contributions) is shared half and half.
    """
    K = sp.csr_matrix(K)
    if K.shape[0] != p.order:
        raise ParameterError("partition", f"covers {p.order} unknowns, matrix has {K.shape[0]}")
    cross = K[p.I1][:, p.I2].tocoo()
    hit = np.flatnonzero(cross.data != 0)
    if hit.size:
        k = hit[0]
        pair = (int(p.I1[cross.row[k]]), int(p.I2[cross.col[k]]))
        raise PartitionError(f"subdomains interact directly: K{pair} = {cross.data[k]:.3e}", pair=pair)

    K11 = K[p.I1][:, p.I1].tocsr()
    K22 = K[p.I2][:, p.I2].tocsr()
    KGG = K[p.IGamma][:, p.IGamma].tocsr()
    K1G = K[p.I1][:, p.IGamma].tocsr()
    K2G = K[p.I2][:, p.IGamma].tocsr()

    diag = KGG.diagonal()
    off = KGG - sp.diags(diag)
    from_gamma = -np.asarray(off.sum(axis=1)).ravel()
    from_1 = -np.asarray(K1G.sum(axis=0)).ravel()
    from_2 = -np.asarray(K2G.sum(axis=0)).ravel()
    rest = diag - from_gamma - from_1 - from_2
    shared = 0.5 * (from_gamma + rest)
    KGG1 = (0.5 * off + sp.diags(shared + from_1)).tocsr()
    KGG2 = (0.5 * off + sp.diags(shared + from_2)).tocsr()
    return ArrowheadBlocks(K11, K22, KGG, K1G, K2G, KGG1, KGG2, p)


class _BlockSolver:
    """Factorisation of a subdomain block, dense Cholesky at desk scale."""

    def __init__(self, A):
        n = A.shape[0]
        self.n = n
        if n == 0:
            self._solve = lambda b: np.zeros_like(b, dtype=float)
            return
        if n <= DENSE_SOLVE_LIMIT:
            dense = A.toarray() if sp.issparse(A) else np.asarray(A)
            try:
                factor = sla.cho_factor(dense, lower=True)
            except np.linalg.LinAlgError:
                smallest = float(np.linalg.eigvalsh(dense)[0])
                raise SingularBlockError(
                    f"subdomain block is singular (smallest eigenvalue {smallest:.3e})",
                    smallest=smallest) from None
            self._solve = lambda b: sla.cho_solve(factor, b)
        else:
            try:
                lu = spla.splu(sp.csc_matrix(A))
            except RuntimeError as exc:
                raise SingularBlockError(f"subdomain block is singular: {exc}") from exc
            pivots = np.abs(lu.U.diagonal())
            if pivots.min() <= 1e-14 * pivots.max():
                raise SingularBlockError("subdomain block is singular", smallest=float(pivots.min()))
            self._solve = lu.solve

    def solve(self, b):
        return self._solve(np.asarray(b, dtype=float))


def _solvers(b):
    return {1: _BlockSolver(b.K11), 2: _BlockSolver(b.K22)}


def schur_complement(b, solvers=None):
    """Dense ``S = S1 + S2`` with ``S_i = K_GG^(i) - K_Gi K_ii^{-1} K_iG``.

    Returns ``(S, S1, S2)``.
    """
    solvers = solvers or _solvers(b)
    parts = []
    for i in (1, 2):
        Kii, KiG, KGGi = b.side(i)
        X = solvers[i].solve(KiG.toarray())
        Si = KGGi.toarray() - KiG.T @ X
        parts.append(0.5 * (Si + Si.T))
    return parts[0] + parts[1], parts[0], parts[1]


def energy_minimizing_extension(b, side, q, solvers=None):
    """``u_i = -K_ii^{-1} K_iG q``: the minimum-energy extension of band data into side ``i``."""
    q = np.asarray(q, dtype=float)
    if q.shape[0] != b.KGG.shape[0]:
        raise ParameterError("q", f"length {q.shape[0]} does not match band size {b.KGG.shape[0]}")
    Kii, KiG, _ = b.side(side)
    solver = solvers[side] if solvers else _BlockSolver(Kii)
    return -solver.solve(KiG @ q)


def _is_neumann(K):
    K = sp.csr_matrix(K)
    ones = np.ones(K.shape[0])
    return bool(np.max(np.abs(K @ ones)) <= 1e-10 * abs(K).max() * np.sqrt(K.shape[0]))


def _project_rhs(f, neumann):
    f = np.asarray(f, dtype=float).copy()
    if neumann:
        mean = f.mean()
        if abs(mean) > 1e-12 * max(np.max(np.abs(f)), np.finfo(float).tiny):
            warnings.warn(f"right-hand side has mean {mean:.3e}; projecting out the constant mode",
                          RuntimeWarning, stacklevel=3)
        f -= mean
    return f


def solve_monolithic(K, f):
    """Direct solve of ``K u = f``; Neumann problems return the zero-mean solution."""
    neumann = _is_neumann(K)
    f = _project_rhs(f, neumann)
    A = sp.csr_matrix(K).toarray() if K.shape[0] <= DENSE_SOLVE_LIMIT else None
    n = K.shape[0]
    if neumann:
        c = np.mean(sp.csr_matrix(K).diagonal()) / n
        if A is not None:
            u = sla.solve(A + c, f, assume_a="pos")
        else:
            # ground the first unknown; row 0 holds automatically for zero-mean f
            u = np.zeros(n)
            u[1:] = spla.spsolve(sp.csc_matrix(K)[1:, 1:], f[1:])
        return u - u.mean()
    if A is not None:
        return sla.solve(A, f, assume_a="pos")
    return spla.spsolve(sp.csc_matrix(K), f)


def solve_substructured(K, f, p, blocks=None):
    """Solve ``K u = f`` through the band Schur complement and back-substitution."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != K.shape[0]:
        raise ParameterError("f", f"length {f.shape[0]} does not match matrix order {K.shape[0]}")
    neumann = _is_neumann(K)
    f = _project_rhs(f, neumann)
    b = blocks or split_blocks(K, p)
    solvers = _solvers(b)
    S, _, _ = schur_complement(b, solvers)
    f1, f2, fG = f[p.I1], f[p.I2], f[p.IGamma]
    g1, g2 = solvers[1].solve(f1), solvers[2].solve(f2)
    rhs = fG - b.K1G.T @ g1 - b.K2G.T @ g2
    if neumann:
        c = np.trace(S) / S.shape[0] ** 2
        uG = sla.solve(S + c, rhs - rhs.mean(), assume_a="pos")
    else:
        uG = sla.solve(S, rhs, assume_a="pos")
    u = np.empty_like(f)
    u[p.IGamma] = uG
    u[p.I1] = solvers[1].solve(f1 - b.K1G @ uG)
    u[p.I2] = solvers[2].solve(f2 - b.K2G @ uG)
    return u - u.mean() if neumann else u


@dataclass(frozen=True)
class ResidualReport:
    r1: float
    r2: float
    r_gamma: float
    r_trace: float
    f_norm: float

    def passed(self, rtol=1e-8):
        bound = rtol * max(self.f_norm, np.finfo(float).tiny)
        return max(self.r1, self.r2, self.r_gamma, self.r_trace) <= bound or \
            (self.f_norm == 0 and max(self.r1, self.r2, self.r_gamma) == 0)


def verify_two_domain_residuals(K, p, f, u):
    """Residuals of the subdomain equations and of the band (transmission) equation."""
    f = np.asarray(f, dtype=float)
    r = sp.csr_matrix(K) @ np.asarray(u, dtype=float) - f
    norm = lambda idx: float(np.max(np.abs(r[idx]), initial=0.0))
    return ResidualReport(norm(p.I1), norm(p.I2), norm(p.IGamma), 0.0,
                          float(np.max(np.abs(f), initial=0.0)))
