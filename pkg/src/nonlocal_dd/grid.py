"""Uniform tensor meshes of the unit d-cube.

Two layouts are supported. ``cell`` places one unknown per cube element
``[i h, (i+1) h]``. ``vertex`` places one unknown per mesh vertex ``i h`` (``i = 0..n``)
and uses the dual cell ``[x - h/2, x + h/2]`` clipped to the unit interval, so the
two boundary cells have half width. Dirichlet grids add ``ghost_layers`` full cells of
width ``h`` on every side to represent the nonlocal collar.

Elements are numbered lexicographically (C order, first coordinate slowest) over the
whole tensor grid including the collar. Unknowns are the interior elements, numbered
in the same order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .kernel import SUPPORT_SLACK, distance

LAYOUTS = ("cell", "vertex")
BOUNDARY_CONDITIONS = ("neumann", "dirichlet")


def _axis_cells(n, g, layout):
    h = 1.0 / n
    k = np.arange(-g, 0)
    left_lo, left_hi = k * h, (k + 1) * h
    right_lo = 1.0 + np.arange(g) * h
    right_hi = right_lo + h
    if layout == "cell":
        i = np.arange(n)
        lo, hi = i * h, (i + 1) * h
        nodes = (i + 0.5) * h
    else:
        x = np.arange(n + 1) * h
        lo = np.maximum(x - 0.5 * h, 0.0)
        hi = np.minimum(x + 0.5 * h, 1.0)
        nodes = x
    lo = np.concatenate([left_lo, lo, right_lo])
    hi = np.concatenate([left_hi, hi, right_hi])
    nodes = np.concatenate([0.5 * (left_lo + left_hi), nodes, 0.5 * (right_lo + right_hi)])
    return lo, hi, nodes


@dataclass(frozen=True)
class Grid:
    dim: int
    n: int
    delta: float
    bc: str
    layout: str
    ghost_layers: int
    lo: np.ndarray = field(repr=False, compare=False)
    hi: np.ndarray = field(repr=False, compare=False)
    nodes: np.ndarray = field(repr=False, compare=False)

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def per_side(self):
        """Elements per axis, collar included."""
        return len(self.lo)

    @property
    def interior_per_side(self):
        return self.n if self.layout == "cell" else self.n + 1

    @property
    def n_elements(self):
        return self.per_side ** self.dim

    @property
    def n_interior(self):
        return self.interior_per_side ** self.dim

    @property
    def shape(self):
        return (self.per_side,) * self.dim

    def axis_interior(self):
        g = self.ghost_layers
        mask = np.zeros(self.per_side, dtype=bool)
        mask[g:g + self.interior_per_side] = True
        return mask

    def multi_index(self, ids):
        self._check_ids(ids)
        return np.stack(np.unravel_index(np.asarray(ids), self.shape), axis=-1)

    def flat_index(self, multi):
        multi = np.asarray(multi)
        return np.ravel_multi_index(tuple(np.moveaxis(multi, -1, 0)), self.shape)

    def _check_ids(self, ids):
        ids = np.asarray(ids)
        if np.any(ids < 0) or np.any(ids >= self.n_elements):
            raise ParameterError("id", f"element id out of range [0, {self.n_elements})")

    def is_interior(self, ids):
        m = self.multi_index(ids)
        g = self.ghost_layers
        return np.all((m >= g) & (m < g + self.interior_per_side), axis=-1)

    def interior_ids(self):
        axis = np.flatnonzero(self.axis_interior())
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.ravel_multi_index(tuple(mesh), self.shape).ravel()

    def element_center(self, ids):
        """Barycentre of the element(s); for the cell layout ``(m + 1/2) h - g h``."""
        m = self.multi_index(ids)
        return 0.5 * (self.lo[m] + self.hi[m])

    def element_node(self, ids):
        """Representative point: the vertex for the vertex layout, else the centre."""
        return self.nodes[self.multi_index(ids)]

    def element_volume(self, ids):
        m = self.multi_index(ids)
        return np.prod(self.hi[m] - self.lo[m], axis=-1)

    def element_bounds(self, ids):
        m = self.multi_index(ids)
        return self.lo[m], self.hi[m]

    def interior_volumes(self):
        return self.element_volume(self.interior_ids())

    def interior_nodes(self):
        return self.element_node(self.interior_ids())


def build_grid(d, n, delta, bc="neumann", layout="vertex"):
    """Mesh of ``[0, 1]^d`` with ``n`` intervals per side.

    Neumann grids have no collar. Dirichlet grids get ``ceil(delta / h)`` ghost layers,
    a full cubic frame at least ``delta`` thick.
    """
    if not isinstance(d, (int, np.integer)) or d not in (1, 2, 3):
        raise ParameterError("dim", f"must be 1, 2 or 3, got {d!r}")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ParameterError("n", f"must be an integer >= 2, got {n!r}")
    if not (0.0 < delta < 1.0):
        raise ParameterError("delta", f"must satisfy 0 < delta < 1, got {delta!r}")
    if bc not in BOUNDARY_CONDITIONS:
        raise ParameterError("bc", f"expected neumann or dirichlet, got {bc!r}")
    if layout not in LAYOUTS:
        raise ParameterError("layout", f"expected cell or vertex, got {layout!r}")
    h = 1.0 / n
    g = 0 if bc == "neumann" else math.ceil(delta / h - 1e-9)
    lo, hi, nodes = _axis_cells(int(n), g, layout)
    return Grid(int(d), int(n), float(delta), bc, layout, g, lo, hi, nodes)


def neighbors_within(grid, id, delta, norm="euclidean"):
    """Elements ``j != id`` whose centre lies within ``delta`` of the centre of ``id``."""
    if not delta > 0:
        raise ParameterError("delta", f"must be positive, got {delta}")
    c = grid.element_center(id)
    centers = grid.element_center(np.arange(grid.n_elements))
    r = distance(c, centers, norm)
    hits = np.flatnonzero(r <= delta * (1.0 + SUPPORT_SLACK))
    return hits[hits != id]
