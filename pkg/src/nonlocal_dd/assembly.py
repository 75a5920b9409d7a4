"""Galerkin stiffness matrices for piecewise-constant shape functions.

For indicator functions of elements the bilinear form gives a weighted graph Laplacian:
``K_ij = -W_ij`` off the diagonal and ``K_ii = sum_j W_ij`` with
``W_ij = int_{E_i} int_{E_j} C(x, x') dx' dx``. Ghost (collar) elements of a Dirichlet
grid carry zero data, so they only feed the diagonal.

Pairs are enumerated per axis first: two boxes interact only if each per-axis gap is
within the horizon. Pair weights depend only on the per-axis geometry (lengths and
offset), so each distinct geometry is integrated once and scattered back.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ParameterError
from .integrals import interval_pair_measure, rect_pair_measure_euclidean
from .kernel import SUPPORT_SLACK

RULES = ("midpoint", "subdiv", "exact")
_CHUNK = 4096


@dataclass(frozen=True)
class QuadratureSpec:
    """How ``W_ij`` is evaluated.

    ``midpoint`` uses ``|E_i| |E_j| C(c_i, c_j)``; ``subdiv`` splits each element into
    ``q`` sub-cells per edge and applies the midpoint rule on every sub-cell pair;
    ``exact`` integrates the indicator kernel in closed form (1D, max norm) or to
    round-off (2D Euclidean).
    """

    rule: str = "exact"
    q: int = 1

    def __post_init__(self):
        if self.rule not in RULES:
            raise ParameterError("quadrature", f"unknown rule {self.rule!r}")
        if not isinstance(self.q, (int, np.integer)) or self.q < 1:
            raise ParameterError("quadrature", f"subdivisions must be an integer >= 1, got {self.q!r}")
        if self.rule == "midpoint" and self.q != 1:
            raise ParameterError("quadrature", "midpoint takes no subdivision count")

    @classmethod
    def parse(cls, text):
        text = str(text).strip().lower()
        if text in ("midpoint", "exact"):
            return cls(text, 1)
        if text.startswith("subdiv"):
            _, _, q = text.partition(":")
            try:
                return cls("subdiv", int(q) if q else 2)
            except ValueError:
                raise ParameterError("quadrature", f"bad subdivision count in {text!r}") from None
        raise ParameterError("quadrature", f"expected midpoint, subdiv:<q> or exact, got {text!r}")

    @property
    def label(self):
        return f"subdiv:{self.q}" if self.rule == "subdiv" else self.rule

    @property
    def subdivisions(self):
        return 1 if self.rule == "midpoint" else self.q


MIDPOINT = QuadratureSpec("midpoint")
EXACT = QuadratureSpec("exact")


def _axis_pairs(grid, delta):
    """Ordered per-axis element pairs within the horizon, with a geometry class id."""
    lo, hi = grid.lo, grid.hi
    m = len(lo)
    a, b = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    a, b = a.ravel(), b.ravel()
    gap = np.maximum(np.maximum(lo[b] - hi[a], lo[a] - hi[b]), 0.0)
    keep = gap <= delta * (1.0 + SUPPORT_SLACK)
    a, b, gap = a[keep], b[keep], gap[keep]
    geom = np.stack([hi[a] - lo[a], hi[b] - lo[b], lo[b] - lo[a]], axis=1)
    key = np.round(geom * (grid.n * 2.0 ** 20)).astype(np.int64)
    _, first, cls = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return a, b, gap, cls.ravel(), first


def _combine(grid, delta, norm, axes):
    """Tensor product of per-axis pair lists, pruned by the horizon."""
    a0, b0, gap0, cls0, _ = axes
    ea, eb, cls = a0[:, None], b0[:, None], cls0[:, None]
    gsum = gap0 ** 2 if norm == "euclidean" else gap0.copy()
    lim = delta * (1.0 + SUPPORT_SLACK)
    for _ in range(1, grid.dim):
        P, Q = np.meshgrid(np.arange(len(ea)), np.arange(len(a0)), indexing="ij")
        P, Q = P.ravel(), Q.ravel()
        if norm == "euclidean":
            g = gsum[P] + gap0[Q] ** 2
            keep = g <= lim * lim
        else:
            g = np.maximum(gsum[P], gap0[Q])
            keep = g <= lim
        P, Q = P[keep], Q[keep]
        ea = np.column_stack([ea[P], a0[Q]])
        eb = np.column_stack([eb[P], b0[Q]])
        cls = np.column_stack([cls[P], cls0[Q]])
        gsum = g[keep]
    return ea, eb, cls


def _subcell_points(lo, hi, q):
    w = (hi - lo) / q
    pts = lo[:, None] + (np.arange(q) + 0.5) * w[:, None]
    return pts, np.broadcast_to(w[:, None], pts.shape)


def _weights_subdiv(lo_i, hi_i, lo_j, hi_j, kernel, q):
    # lo_i etc. have shape (P, d); q^d sub-points per element, tensor-product structure
    P, d = lo_i.shape
    diff2 = np.zeros((P,) + (q,) * (2 * d))
    dmax = np.zeros_like(diff2)
    vol = np.ones_like(diff2)
    for k in range(d):
        pi, wi = _subcell_points(lo_i[:, k], hi_i[:, k], q)
        pj, wj = _subcell_points(lo_j[:, k], hi_j[:, k], q)
        diff = np.abs(pj[:, None, :] - pi[:, :, None])
        ww = wi[:, :, None] * wj[:, None, :]
        shape = [P] + [1] * (2 * d)
        shape[1 + k], shape[1 + d + k] = q, q
        diff = diff.reshape(shape)
        diff2 = diff2 + diff * diff
        dmax = np.maximum(dmax, diff)
        vol = vol * ww.reshape(shape)
    r = np.sqrt(diff2) if kernel.norm == "euclidean" else dmax
    return np.sum(vol * kernel.of_distance(r), axis=tuple(range(1, 2 * d + 1)))


def _weights_exact(lo_i, hi_i, lo_j, hi_j, kernel):
    if not kernel.is_indicator:
        raise ParameterError("quadrature", "exact integration needs an indicator kernel")
    d = lo_i.shape[1]
    delta = kernel.delta
    if d == 1 or kernel.norm == "max":
        w = np.ones(len(lo_i))
        for k in range(d):
            w = w * interval_pair_measure(lo_i[:, k], hi_i[:, k], lo_j[:, k], hi_j[:, k], delta)
    elif d == 2:
        w = rect_pair_measure_euclidean((lo_i[:, 0], hi_i[:, 0]), (lo_j[:, 0], hi_j[:, 0]),
                                        (lo_i[:, 1], hi_i[:, 1]), (lo_j[:, 1], hi_j[:, 1]), delta)
    else:
        raise ParameterError("quadrature", "exact Euclidean integration is available for d <= 2; use subdiv:<q>")
    return kernel.scale * w


def _evaluate(lo_i, hi_i, lo_j, hi_j, kernel, quad, workers):
    def run(sl):
        args = (lo_i[sl], hi_i[sl], lo_j[sl], hi_j[sl], kernel)
        if quad.rule == "exact":
            return _weights_exact(*args)
        return _weights_subdiv(*args, quad.subdivisions)

    chunk = max(1, _CHUNK // max(1, quad.subdivisions ** (2 * lo_i.shape[1]) // 16))
    slices = [slice(s, s + chunk) for s in range(0, len(lo_i), chunk)]
    if workers > 1 and len(slices) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, slices))
    else:
        parts = [run(sl) for sl in slices]
    return np.concatenate(parts) if parts else np.zeros(0)


def _check_collar(grid, kernel):
    if grid.bc == "dirichlet" and grid.ghost_layers * grid.h < kernel.delta * (1.0 - 1e-9):
        raise ParameterError("grid", f"collar of {grid.ghost_layers} layers (width "
                             f"{grid.ghost_layers * grid.h:.4g}) is thinner than delta={kernel.delta:.4g}")


def pair_weights(grid, kernel, quad=EXACT, workers=1):
    """All element pairs ``i < j`` (whole grid ids) within the horizon with at least one
    interior element, and their weights ``W_ij``. Returns ``(i, j, w)``.
    """
    _check_collar(grid, kernel)
    axes = _axis_pairs(grid, kernel.delta)
    ea, eb, cls = _combine(grid, kernel.delta, kernel.norm, axes)
    shape = grid.shape
    i = np.ravel_multi_index(tuple(ea.T), shape)
    j = np.ravel_multi_index(tuple(eb.T), shape)
    inside = grid.axis_interior()
    keep = (i < j) & (np.all(inside[ea], axis=1) | np.all(inside[eb], axis=1))
    i, j, ea, eb, cls = i[keep], j[keep], ea[keep], eb[keep], cls[keep]

    n_cls = int(axes[3].max()) + 1 if len(axes[3]) else 1
    code = np.zeros(len(cls), dtype=np.int64)
    for k in range(cls.shape[1]):
        code = code * n_cls + cls[:, k]
    _, first, inverse = np.unique(code, return_index=True, return_inverse=True)
    ra, rb = ea[first], eb[first]
    w_unique = _evaluate(grid.lo[ra], grid.hi[ra], grid.lo[rb], grid.hi[rb], kernel, quad, workers)
    w = w_unique[inverse.ravel()]
    nz = w != 0.0
    return i[nz], j[nz], w[nz]


def _resolve_workers(workers):
    if workers is None:
        workers = int(os.environ.get("NONLOCAL_WORKERS", "1") or 1)
    if workers < 1:
        raise ParameterError("workers", f"must be >= 1, got {workers}")
    return workers


def assemble_stiffness(grid, kernel, quad=EXACT, workers=None):
    """Stiffness matrix (CSR, order ``grid.n_interior``) of the nonlocal form."""
    if isinstance(quad, str):
        quad = QuadratureSpec.parse(quad)
    workers = _resolve_workers(workers)
    i, j, w = pair_weights(grid, kernel, quad, workers)
    unknown = np.full(grid.n_elements, -1, dtype=np.int64)
    unknown[grid.interior_ids()] = np.arange(grid.n_interior)
    ui, uj = unknown[i], unknown[j]
    N = grid.n_interior

    diag = np.bincount(ui[ui >= 0], weights=w[ui >= 0], minlength=N)
    diag += np.bincount(uj[uj >= 0], weights=w[uj >= 0], minlength=N)
    both = (ui >= 0) & (uj >= 0)
    rows = np.concatenate([np.arange(N), ui[both], uj[both]])
    cols = np.concatenate([np.arange(N), uj[both], ui[both]])
    vals = np.concatenate([diag, -w[both], -w[both]])
    K = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    K.sort_indices()
    return K


def apply_operator(K, u):
    u = np.asarray(u, dtype=float)
    if u.shape[0] != K.shape[1]:
        raise ParameterError("u", f"length {u.shape[0]} does not match matrix order {K.shape[1]}")
    return K @ u


def quadratic_form_pairs(i, j, w, u_full):
    """``1/2 sum_i sum_j W_ij (u_j - u_i)^2`` from the unordered pair list."""
    u_full = np.asarray(u_full, dtype=float)
    return float(np.sum(w * (u_full[j] - u_full[i]) ** 2))


def export_matrix(K, path):
    """Write ``K`` in Matrix Market coordinate format with symmetric storage."""
    path = os.fspath(path)
    # open the file ourselves: the writer does not always surface OS errors
    try:
        with open(path, "wb") as fh:
            scipy.io.mmwrite(fh, sp.coo_matrix(K), symmetry="symmetric")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write matrix to {path}: {exc.strerror}") from exc


def import_matrix(path):
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            return sp.csr_matrix(scipy.io.mmread(fh))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read matrix from {path}: {exc.strerror}") from exc
