"""Exact measures of ``{(x, x') in E x F : |x - x'| <= delta}`` for box elements.

These are the element-pair integrals of the indicator kernel. In one dimension the
measure is piecewise quadratic in the interval data and has a closed form. In two
dimensions with the Euclidean ball, write ``t = x' - x``; the density of ``t`` is a
product of two trapezoids, so the measure is ``int rho_1(t1) H_2(sqrt(delta^2 - t1^2)) dt1``.
The substitution ``t1 = delta sin(theta)`` removes the square-root endpoint singularity
and the remaining integrand is smooth between known kinks, where Gauss-Legendre is
accurate to round-off.
"""
from __future__ import annotations

import numpy as np

GAUSS_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_ORDER)


def _ramp_integral(z, length):
    # antiderivative of clip(z, 0, length)
    z = np.asarray(z, dtype=float)
    return np.where(z <= 0.0, 0.0,
                    np.where(z <= length, 0.5 * z * z,
                             length * (z - 0.5 * length)))


def _below(t, a, b, c, d):
    """Measure of ``{(x, y) in [a,b] x [c,d] : y - x <= t}``."""
    length = d - c
    return _ramp_integral(t + b - c, length) - _ramp_integral(t + a - c, length)


def _interval_gap(a, b, c, d):
    return np.maximum(np.maximum(c - b, a - d), 0.0)


def interval_pair_measure(a, b, c, d, delta):
    """Measure of ``{(x, y) in [a,b] x [c,d] : |y - x| <= delta}`` (vectorised)."""
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    val = _below(delta, a, b, c, d) - _below(-delta, a, b, c, d)
    return np.where(_interval_gap(a, b, c, d) >= delta, 0.0, np.maximum(val, 0.0))


def _offset_density(t, a, b, c, d):
    # density of y - x for x ~ U[a,b], y ~ U[c,d], unnormalised
    return np.maximum(0.0, np.minimum(b, d - t) - np.maximum(a, c - t))


def rect_pair_measure_euclidean(x_i, x_j, y_i, y_j, delta):
    """Measure of ``{(p, q) in E_i x E_j : |q - p|_2 <= delta}`` for rectangles.

    ``x_i = (a, b)`` and ``x_j = (c, d)`` are the x-intervals of the two rectangles,
    ``y_i``, ``y_j`` the y-intervals. Each entry may be an array of equal shape.
    """
    a, b = (np.asarray(v, dtype=float).ravel() for v in x_i)
    c, d = (np.asarray(v, dtype=float).ravel() for v in x_j)
    e, f = (np.asarray(v, dtype=float).ravel() for v in y_i)
    g, k = (np.asarray(v, dtype=float).ravel() for v in y_j)

    half = 0.5 * np.pi
    t_kinks = np.stack([c - b, c - a, d - b, d - a], axis=1) / delta
    s_kinks = np.abs(np.stack([g - f, g - e, k - f, k - e], axis=1)) / delta
    th_t = np.where(np.abs(t_kinks) < 1.0, np.arcsin(np.clip(t_kinks, -1.0, 1.0)), -half)
    th_s = np.where(s_kinks < 1.0, np.arccos(np.clip(s_kinks, 0.0, 1.0)), -half)
    ends = np.tile([-half, half], (len(a), 1))
    theta = np.sort(np.concatenate([ends, th_t, th_s, -th_s], axis=1), axis=1)

    lo, hi = theta[:, :-1], theta[:, 1:]
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid[..., None] + rad[..., None] * _GL_X
    weights = rad[..., None] * _GL_W
    t1 = delta * np.sin(nodes)
    r = delta * np.cos(nodes)
    ex = lambda v: v[:, None, None]
    inner = _below(r, ex(e), ex(f), ex(g), ex(k)) - _below(-r, ex(e), ex(f), ex(g), ex(k))
    rho = _offset_density(t1, ex(a), ex(b), ex(c), ex(d))
    total = np.sum(weights * rho * inner * r, axis=(1, 2))

    gx = _interval_gap(a, b, c, d)
    gy = _interval_gap(e, f, g, k)
    return np.where(gx * gx + gy * gy >= delta * delta, 0.0, np.maximum(total, 0.0))
