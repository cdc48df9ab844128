"""Coupled profile system for the fractional dyadic NSE and the search for
bump amplitudes whose boundary (monodromy) matrix has a large real
eigenvalue.

    h' = A(s) h,   A = [[q/lam - lam**-2a, -p/lam,   0        ],
                        [2 p/lam,          -1,       q        ],
                        [0,                -2 q,     -lam**2a ]]

The diagonal constants are treated exactly (Lawson integrating factor) and
the bump-dependent remainder by classical RK4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bump import BumpProfile, phi
from .hsystem import DEFAULT_GRID, ConstructionError, HSolution, HVariant, SearchExhausted

SEARCH_GRID = 512


def _linear_rates(lam, alpha):
    return np.array([-(lam ** (-2.0 * alpha)), -1.0, -(lam ** (2.0 * alpha))])


def _coupling(sig, h, P, Q, lam):
    """Off-diagonal and q-dependent part of A(s) applied to h (shape (3, ...))."""
    f = phi(sig)
    p = P * f
    q = Q * f
    il = 1.0 / lam
    return np.stack(
        [
            il * q * h[0] - il * p * h[1],
            2.0 * il * p * h[0] + q * h[2],
            -2.0 * q * h[1],
        ]
    )


def _lawson_step(sig, h, delta, P, Q, lam, rates):
    shape = (3,) + (1,) * (np.ndim(h) - 1)
    r = rates.reshape(shape)
    E = np.exp(r * delta)
    Eh = np.exp(r * (0.5 * delta))
    k1 = _coupling(sig, h, P, Q, lam)
    u2 = Eh * (h + 0.5 * delta * k1)
    k2 = _coupling(sig + 0.5 * delta, u2, P, Q, lam)
    u3 = Eh * h + 0.5 * delta * k2
    k3 = _coupling(sig + 0.5 * delta, u3, P, Q, lam)
    u4 = E * h + delta * Eh * k3
    k4 = _coupling(sig + delta, u4, P, Q, lam)
    return E * h + delta / 6.0 * (E * k1 + 2.0 * Eh * (k2 + k3) + k4)


def propagate(lam, alpha, P, Q, h0, m, keep=False):
    """Integrate from s = 0 to 1 in ``m`` uniform steps.

    ``P``, ``Q`` broadcast against the trailing axes of ``h0`` (shape (3, ...)).
    Returns the end state, or all node states (m + 1, 3, ...) when ``keep``.
    """
    rates = _linear_rates(lam, alpha)
    h = np.array(h0, dtype=float)
    d = 1.0 / m
    hist = [h] if keep else None
    for i in range(m):
        h = _lawson_step(i * d, h, d, P, Q, lam, rates)
        if keep:
            hist.append(h)
    return np.stack(hist) if keep else h


def monodromy_matrix(lam, alpha, P, Q, m=DEFAULT_GRID):
    """B[i, k] = component i (h1, h2) at s = 1 of the solution started from basis k.

    Basis 0 is (0, 1, 0) and basis 1 is (0, 0, 1). ``P`` and ``Q`` may be
    arrays; the result then has shape P.shape + (2, 2).
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    P, Q = np.broadcast_arrays(P, Q)
    h0 = np.zeros((3,) + P.shape + (2,))
    h0[1, ..., 0] = 1.0
    h0[2, ..., 1] = 1.0
    end = propagate(lam, alpha, P[..., None], Q[..., None], h0, m)
    B = np.moveaxis(end[:2], 0, -2)  # (..., i, k)
    return B


def real_leading_eigen(B):
    """Real eigenvalue of largest modulus of 2x2 matrices (nan when none is real)."""
    tr = B[..., 0, 0] + B[..., 1, 1]
    det = B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]
    disc = tr * tr - 4.0 * det
    root = np.sqrt(np.where(disc >= 0, disc, np.nan))
    e1 = 0.5 * (tr + root)
    e2 = 0.5 * (tr - root)
    return np.where(np.abs(e1) >= np.abs(e2), e1, e2)


class CoupledH(HSolution):
    """Profiles of the coupled system stored at the M + 1 nodes; values in
    between come from a partial Lawson step off the node below."""

    def __init__(self, lam, alpha, bump: BumpProfile, c0, d0, rho=None, m=DEFAULT_GRID):
        self.variant = HVariant.COUPLED_GNSE
        self.lam = float(lam)
        self.alpha = float(alpha)
        self.exponent = self.alpha
        self.s_exp = 2.0 * self.alpha
        self.c_exp = 1.0
        self.eps = 1.0
        self.bump = bump
        self.c0 = float(c0)
        self.d0 = float(d0)
        self.rho = None if rho is None else float(rho)
        self.m = int(m)
        self._rates = _linear_rates(self.lam, self.alpha)
        self._nodes = propagate(self.lam, self.alpha, bump.P, bump.Q, np.array([0.0, self.c0, self.d0]), self.m, keep=True)
        if not np.all(np.isfinite(self._nodes)):
            raise ConstructionError("coupled profile integration produced non-finite values")

    @property
    def samples(self):
        return self._nodes.T.copy()

    def evaluate(self, sigma):
        s = np.asarray(sigma, dtype=float)
        if np.any(s < 0) or np.any(s > 1):
            raise ValueError("profile argument must lie in [0, 1]")
        flat = s.ravel()
        i = np.clip(np.floor(flat * self.m).astype(np.int64), 0, self.m)
        base = i / self.m
        delta = flat - base
        start = self._nodes[i].T  # (3, n)
        out = _lawson_step(base, start, delta, self.bump.P, self.bump.Q, self.lam, self._rates)
        return out.reshape((3,) + s.shape)

    def derivative(self, sigma, values=None):
        s = np.asarray(sigma, dtype=float)
        h = self.evaluate(s) if values is None else np.asarray(values)
        r = self._rates.reshape((3,) + (1,) * s.ndim)
        return r * h + _coupling(s, h, self.bump.P, self.bump.Q, self.lam)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["exponent"] = self.alpha
        return d


@dataclass(frozen=True)
class SearchConfig:
    half_widths: tuple = (5.0, 10.0, 20.0, 50.0)
    points: int = 101
    refine_points: int = 21
    search_m: int = SEARCH_GRID
    m: int = DEFAULT_GRID


def _eigenpair(B, rho):
    w, V = np.linalg.eig(B)
    k = int(np.argmin(np.abs(w - rho)))
    v = np.real(V[:, k])
    if abs(v[1]) > 1e-12 * abs(v[0]):
        v = v / v[1]
    else:
        v = v / v[0]
    return float(np.real(w[k])), v


def calibrate_monodromy_gnse(lam, alpha, R=None, config: SearchConfig | None = None):
    """Search bump amplitudes (P, Q) until B has a real eigenvalue with |rho| > R.

    Boxes [-w, w]^2 are scanned in increasing order on a uniform grid; inside a
    box the first qualifying cell in lexicographic (P, Q) order wins. When a
    box has none, a finer grid around its best cell is tried before moving on.

    Returns (c0, d0, rho, bump, profile).
    """
    if not (0.0 < alpha < 0.5):
        raise ValueError(f"the coupled construction needs 0 < alpha < 1/2, got {alpha}")
    R = float(lam) if R is None else float(R)
    cfg = config or SearchConfig()
    best = (-1.0, None)

    def accept(P, Q):
        B = monodromy_matrix(lam, alpha, P, Q, cfg.m)
        rho = real_leading_eigen(B)
        if not (np.isfinite(rho) and abs(rho) > R):
            return None
        rho, v = _eigenpair(B, float(rho))
        c0, d0 = float(v[0]), float(v[1])
        bump = BumpProfile(float(P), float(Q))
        h = CoupledH(lam, alpha, bump, c0, d0, rho, cfg.m)
        return c0, d0, rho, bump, h

    for w in cfg.half_widths:
        n = cfg.points if w > 0 else 1
        ax = np.linspace(-w, w, n)
        PP, QQ = np.meshgrid(ax, ax, indexing="ij")
        rho = real_leading_eigen(monodromy_matrix(lam, alpha, PP, QQ, cfg.search_m))
        mod = np.where(np.isfinite(rho), np.abs(rho), -1.0)
        k = int(np.argmax(mod))
        if mod.flat[k] > best[0]:
            best = (float(mod.flat[k]), (float(PP.flat[k]), float(QQ.flat[k])))
        hits = np.flatnonzero(mod > R)
        for idx in hits[:8]:
            got = accept(PP.flat[idx], QQ.flat[idx])
            if got is not None:
                return got
        if w > 0 and n > 1:
            step = ax[1] - ax[0]
            P0, Q0 = PP.flat[k], QQ.flat[k]
            fa = np.linspace(-step, step, cfg.refine_points)
            RP, RQ = np.meshgrid(P0 + fa, Q0 + fa, indexing="ij")
            rr = real_leading_eigen(monodromy_matrix(lam, alpha, RP, RQ, cfg.search_m))
            rmod = np.where(np.isfinite(rr), np.abs(rr), -1.0)
            kr = int(np.argmax(rmod))
            if rmod.flat[kr] > best[0]:
                best = (float(rmod.flat[kr]), (float(RP.flat[kr]), float(RQ.flat[kr])))
            for idx in np.flatnonzero(rmod > R)[:8]:
                got = accept(RP.flat[idx], RQ.flat[idx])
                if got is not None:
                    return got
    raise SearchExhausted(
        f"no (P, Q) in the search boxes gives a real eigenvalue beyond {R:.6g}; best |rho| = {max(best[0], 0.0):.6g}",
        best_radius=max(best[0], 0.0),
        best_PQ=best[1],
    )


def build_coupled(lam, alpha, P, Q, c0, d0, rho, m=DEFAULT_GRID) -> CoupledH:
    h = CoupledH(lam, alpha, BumpProfile(P, Q), c0, d0, rho, m)
    return h
