"""Energies, the small-horizon local limit, power-law fits and eigenvalue bound checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import EXACT, pair_weights
from .errors import ParameterError
from .spectrum import rayleigh_quotient
from .strips import strip_quantification  # noqa: F401  (re-export)


@dataclass(frozen=True)
class SampledFunction:
    evaluator: Callable[[np.ndarray], np.ndarray]
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tag: str = ""

    def __call__(self, x):
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    def slope(self, x, step):
        x = np.asarray(x, dtype=float)
        if self.derivative is not None:
            return np.asarray(self.derivative(x), dtype=float)
        return (self(x + step) - self(x - step)) / (2 * step)


# named 1D test functions for the command line
STANDARD_FUNCTIONS = {
    "sin": SampledFunction(lambda x: np.sin(np.pi * x), lambda x: np.pi * np.cos(np.pi * x), "sin(pi x)"),
    "linear": SampledFunction(lambda x: x, lambda x: np.ones_like(x), "x"),
    "constant": SampledFunction(lambda x: np.ones_like(x), lambda x: np.zeros_like(x), "1"),
    "cubic": SampledFunction(lambda x: x ** 3, lambda x: 3 * x ** 2, "x^3"),
}


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    log_prefactor: float
    r_squared: float
    count: int

    @property
    def prefactor(self):
        return float(np.exp(self.log_prefactor))

    def predict(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(xs, ys):
    """Least-squares line through ``(log x, log y)``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ParameterError("xs", "xs and ys must be 1-D sequences of equal length")
    if len(xs) < 3:
        raise ParameterError("xs", f"need at least 3 points, got {len(xs)}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ParameterError("ys", "power-law fits need strictly positive data")
    lx, ly = np.log(xs), np.log(ys)
    if np.ptp(lx) == 0:
        raise ParameterError("xs", "all abscissae are equal")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - np.sum(resid ** 2) / ss_tot)
    return PowerLawFit(float(slope), float(intercept), float(r2), len(xs))


def fit_min_eigen_exponent(records):
    """Fit ``lambda_min ~ c delta^m`` from ``(delta, lambda_min)`` pairs; returns ``m`` as exponent."""
    records = list(records)
    if len(records) < 3:
        raise ParameterError("records", f"need at least 3 records, got {len(records)}")
    deltas, lams = zip(*records)
    return fit_power_law(deltas, lams)


def _sample_full(u, grid):
    # ghost elements carry zero data
    vals = np.zeros(grid.n_elements)
    ids = grid.interior_ids()
    vals[ids] = u(grid.element_node(ids)[..., 0] if grid.dim == 1 else grid.element_node(ids))
    return vals


def nonlocal_energy_p(u, grid, kernel, p=2.0, quad=EXACT):
    """``sum_i sum_j W_ij |u_j - u_i|^p`` over ordered element pairs (no 1/2 factor).

    ``u`` is sampled at the element nodes; collar elements of a Dirichlet grid hold zero.
    """
    if not p >= 1:
        raise ParameterError("p", f"must be >= 1, got {p}")
    i, j, w = pair_weights(grid, kernel, quad)
    vals = _sample_full(u, grid)
    return 2.0 * float(np.sum(w * np.abs(vals[j] - vals[i]) ** p))


def energy_half(u, grid, kernel, quad=EXACT):
    """``a(u, u) = 1/2 sum_i sum_j W_ij (u_j - u_i)^2``, which equals ``u^T K u``."""
    return 0.5 * nonlocal_energy_p(u, grid, kernel, 2.0, quad)


@dataclass(frozen=True)
class LocalLimitRow:
    delta: float
    scaled_energy: float
    local_energy: float

    @property
    def error(self):
        return abs(self.scaled_energy - self.local_energy)


@dataclass
class LocalLimitReport:
    rows: list
    boundary: str
    fit: Optional[PowerLawFit] = field(default=None)


def _gauss_panels(a, b, panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid, rad = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + rad[:, None] * x).ravel(), (rad[:, None] * w).ravel()


def scaled_energy_1d(u, delta, n, boundary="extend", order=8):
    """``3 delta^-3 a(u, u)`` on the unit interval with the indicator kernel.

    Bonds are parametrised as ``(x, x + e)`` and integrated by Gauss-Legendre, ``n``
    panels in ``x``. ``extend`` lets ``x + e`` leave the interval (``u`` is evaluated
    there); ``restrict`` keeps both ends inside, which adds an ``O(delta)`` boundary layer.
    """
    if boundary not in ("extend", "restrict"):
        raise ParameterError("boundary", f"expected extend or restrict, got {boundary!r}")
    xs, wx = _gauss_panels(0.0, 1.0, n, order)
    t, wt = np.polynomial.legendre.leggauss(2 * order)
    if boundary == "extend":
        lo = np.full_like(xs, -delta)
        hi = np.full_like(xs, delta)
    else:
        lo = np.maximum(-delta, -xs)
        hi = np.minimum(delta, 1.0 - xs)
    total = 0.0
    # the integrand is smooth on each side of e = 0; integrate the halves separately
    for a, b in ((lo, np.zeros_like(lo)), (np.zeros_like(hi), hi)):
        mid, rad = 0.5 * (a + b), 0.5 * (b - a)
        e = mid[:, None] + rad[:, None] * t
        diff = u(xs[:, None] + e) - u(xs)[:, None]
        total += np.sum(wx * rad * np.sum(wt * diff * diff, axis=1))
    return 3.0 * delta ** -3 * 0.5 * total


def local_energy_1d(u, n):
    """``|u|_{H^1}^2`` by the composite midpoint rule with ``n`` cells."""
    h = 1.0 / n
    x = (np.arange(n) + 0.5) * h
    return float(h * np.sum(u.slope(x, h / 10) ** 2))


def local_limit_check(u, deltas, n, boundary="extend"):
    """Compare ``3 delta^-3 a(u, u)`` with ``|u|_{H^1}^2`` for decreasing horizons."""
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ParameterError("deltas", "need at least one horizon")
    h = 1.0 / n
    if h > min(deltas) / 20 * (1 + 1e-12):
        raise ParameterError("n", f"h = {h:.3g} is too coarse; need h <= min(delta)/20 = {min(deltas) / 20:.3g}")
    local = local_energy_1d(u, n)
    rows = [LocalLimitRow(d, scaled_energy_1d(u, d, n, boundary), local) for d in deltas]
    fit = None
    errs = [r.error for r in rows]
    if len(rows) >= 3 and all(e > 0 for e in errs):
        fit = fit_power_law(deltas, errs)
    return LocalLimitReport(rows, boundary, fit)


@dataclass(frozen=True)
class RayleighCheck:
    min_ratio: float
    lower_bound: float
    max_ratio: float
    upper_bound: float

    @property
    def holds(self):
        tol = 1e-12 * max(1.0, abs(self.upper_bound))
        return self.min_ratio >= self.lower_bound - tol and self.max_ratio <= self.upper_bound + tol


def rayleigh_bracket_check(K, report, mass, trials=100, seed=0, deflate_constant=False):
    """Rayleigh quotients ``u^T K u / (mass u^T u)`` of random vectors against ``lambda / mass``."""
    if np.ndim(mass) != 0:
        raise ParameterError("mass", "the eigenvalue bracket needs a scalar mass")
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        u = rng.standard_normal(K.shape[0])
        if deflate_constant:
            u -= u.mean()
        ratios.append(rayleigh_quotient(K, u, mass))
    return RayleighCheck(min(ratios), report.lambda_min_nonzero / mass,
                         max(ratios), report.lambda_max / mass)
