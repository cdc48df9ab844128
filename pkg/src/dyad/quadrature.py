"""Quadrature helpers: cumulative composite Simpson on a uniform grid with
evaluation between nodes, and composite Gauss-Legendre over a list of
breakpoints."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


class CumulativeSimpson:
    """F(x) = int_0^x g(u) du on [0, 1] for a vectorized integrand ``g``.

    Each grid cell is integrated by Simpson's rule using g at the two nodes
    and the midpoint. Between nodes F is completed with a Simpson step over
    the partial cell, so F can be evaluated anywhere in [0, 1] at the same
    order as on the nodes.
    """

    def __init__(self, g, m: int):
        if m < 1:
            raise ValueError("need at least one cell")
        self.g = g
        self.m = int(m)
        self.h = 1.0 / self.m
        self.nodes = np.linspace(0.0, 1.0, self.m + 1)
        gn = np.asarray(g(self.nodes), dtype=float)
        gm = np.asarray(g(self.nodes[:-1] + 0.5 * self.h), dtype=float)
        if not (np.all(np.isfinite(gn)) and np.all(np.isfinite(gm))):
            raise FloatingPointError("integrand is not finite on the quadrature grid")
        self.g_nodes = gn
        cells = self.h / 6.0 * (gn[:-1] + 4.0 * gm + gn[1:])
        self.values = np.concatenate([[0.0], np.cumsum(cells)])

    @property
    def total(self) -> float:
        return float(self.values[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.floor(x * self.m).astype(np.int64), 0, self.m - 1)
        x0 = self.nodes[i]
        w = x - x0
        partial = w / 6.0 * (self.g_nodes[i] + 4.0 * self.g(x0 + 0.5 * w) + self.g(x))
        # exactly on a node the partial term is zero anyway; at x = 1 use the stored total
        out = self.values[i] + partial
        return np.where(x >= 1.0, self.values[-1], out)


@lru_cache(maxsize=16)
def _gl_rule(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(g, breakpoints, order: int = 16, per_piece: int = 1) -> float:
    """Integral of ``g`` over [breakpoints[0], breakpoints[-1]].

    Each piece between consecutive breakpoints is split into ``per_piece``
    equal panels with an ``order``-point Gauss rule on each, so a smooth
    integrand with kinks only at breakpoints is integrated spectrally.
    """
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    if bp.size < 2:
        return 0.0
    xg, wg = _gl_rule(order)
    edges = np.concatenate([np.linspace(lo, hi, per_piece + 1)[:-1] for lo, hi in zip(bp[:-1], bp[1:])] + [bp[-1:]])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * xg[None, :]
    vals = np.asarray(g(pts.ravel()), dtype=float).reshape(pts.shape)
    return float(np.sum(half[:, None] * wg[None, :] * vals))


def gauss_legendre_nodes(breakpoints, order: int = 16, per_piece: int = 1):
    """Nodes and weights of the composite rule used by :func:`gauss_legendre`."""
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    xg, wg = _gl_rule(order)
    edges = np.concatenate([np.linspace(lo, hi, per_piece + 1)[:-1] for lo, hi in zip(bp[:-1], bp[1:])] + [bp[-1:]])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * xg[None, :]
    w = half[:, None] * wg[None, :]
    return pts.ravel(), w.ravel()


def simpson_samples(y, dt: float):
    """Cumulative integral of equally spaced samples ``y`` (along axis 0).

    Even-indexed entries use composite Simpson; odd entries add a
    three-point partial step on the last interval, so every sample gets a
    fourth-order-consistent value. Falls back to the trapezoid for two samples.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    out = np.zeros_like(y)
    if n < 2:
        return out
    if n == 2:
        out[1] = 0.5 * dt * (y[0] + y[1])
        return out
    pair = dt / 3.0 * (y[0:-2:2] + 4.0 * y[1:-1:2] + y[2::2])
    out[2::2] = np.cumsum(pair, axis=0)
    # odd indices: integrate the last cell [k-1, k] with the parabola through k-1, k, k+1
    # (or k-2, k-1, k for the final sample)
    k = np.arange(1, n, 2)
    inner = k[k + 1 < n]
    out[inner] = out[inner - 1] + dt / 12.0 * (5.0 * y[inner - 1] + 8.0 * y[inner] - y[inner + 1])
    if (n - 1) % 2 == 1:
        last = n - 1
        out[last] = out[last - 1] + dt / 12.0 * (-y[last - 2] + 8.0 * y[last - 1] + 5.0 * y[last])
    return out
