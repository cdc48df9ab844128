"""Auxiliary profile systems h = (h1, h2, h3) on [0, 1] and their calibration.

The triangular systems share one shape,

    h1' = -(lam**-s - eps lam**-c q) h1 + eps lam**-c p h2
    h2' = -h2 - eps q h3
    h3' = -lam**s h3

with h(0) = (0, c0, d0). eps = +1 for the forward cascade and the fractional
MHD system, eps = -1 for the mixed cascade. s is the time-scale exponent
(2 or 2 beta) and c the coupling exponent (theta or 1). Each component is
solved by an exact integrating factor and a cumulative Simpson quadrature.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from ..quadrature import CumulativeSimpson
from .bump import BumpProfile, phi

DEFAULT_GRID = 4096


class HVariant(str, enum.Enum):
    TRIANGULAR_FORWARD = "TriangularForward"
    TRIANGULAR_MIXED = "TriangularMixed"
    COUPLED_GNSE = "CoupledGNSE"
    TRIANGULAR_FRACTIONAL = "TriangularFractional"


class ConstructionError(RuntimeError):
    pass


class DegenerateKernel(ConstructionError):
    """The amplitude equation for P has no solution in the bump family."""


class InvalidRho(ConstructionError):
    """The requested growth factor rho is in the forbidden range."""


class SearchExhausted(ConstructionError):
    """No bump amplitudes in the search box produced a large enough eigenvalue."""

    def __init__(self, msg, best_radius=0.0, best_PQ=None):
        super().__init__(msg)
        self.best_radius = best_radius
        self.best_PQ = best_PQ


def triangular_exponents(variant: HVariant, lam: float, exponent: float):
    """(s, c, eps) for a triangular variant; ``exponent`` is theta or beta."""
    variant = HVariant(variant)
    if variant is HVariant.TRIANGULAR_FORWARD:
        return 2.0, float(exponent), 1.0
    if variant is HVariant.TRIANGULAR_MIXED:
        return 2.0, float(exponent), -1.0
    if variant is HVariant.TRIANGULAR_FRACTIONAL:
        return 2.0 * float(exponent), 1.0, 1.0
    raise ValueError(f"{variant.value} is not a triangular variant")


def rho_floor(variant: HVariant, lam: float, exponent: float) -> float:
    """rho must exceed this: lam**theta for the theta forms, lam for fractional MHD."""
    variant = HVariant(variant)
    if variant is HVariant.TRIANGULAR_FRACTIONAL:
        return lam
    return lam**exponent


class HSolution:
    """Profiles h1, h2, h3 with dense evaluation on [0, 1].

    ``grid``, ``h1``, ``h2``, ``h3`` hold the samples on the M + 1 uniform
    nodes; :meth:`evaluate` gives values anywhere in [0, 1] and
    :meth:`derivative` the right-hand side of the profile system there.
    """

    variant: HVariant
    lam: float
    s_exp: float
    c_exp: float
    bump: BumpProfile
    c0: float
    d0: float
    rho: float | None
    m: int

    @property
    def grid(self):
        return np.linspace(0.0, 1.0, self.m + 1)

    @property
    def samples(self):
        return self.evaluate(self.grid)

    @property
    def h1(self):
        return self.samples[0]

    @property
    def h2(self):
        return self.samples[1]

    @property
    def h3(self):
        return self.samples[2]

    def end_values(self):
        return self.evaluate(np.array([0.0, 1.0]))

    def boundary_defect(self):
        """(|h1(1) - rho c0|, |h2(1) - rho d0|) and the tolerance scale."""
        if self.rho is None:
            raise ValueError("profile has no target rho")
        e = self.end_values()
        d1 = abs(e[0][1] - self.rho * self.c0)
        d2 = abs(e[1][1] - self.rho * self.d0)
        scale = (1.0 + abs(self.rho)) * (abs(self.c0) + abs(self.d0))
        return d1, d2, scale

    def evaluate(self, sigma):
        raise NotImplementedError

    def derivative(self, sigma):
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "lambda": self.lam,
            "s_exp": self.s_exp,
            "c_exp": self.c_exp,
            "P": self.bump.P,
            "Q": self.bump.Q,
            "c0": self.c0,
            "d0": self.d0,
            "rho": self.rho,
            "grid_M": self.m,
        }


class TriangularH(HSolution):
    def __init__(self, variant, lam, exponent, bump: BumpProfile, c0, d0, rho=None, m=DEFAULT_GRID):
        self.variant = HVariant(variant)
        self.exponent = float(exponent)
        self.lam = float(lam)
        self.s_exp, self.c_exp, self.eps = triangular_exponents(self.variant, self.lam, self.exponent)
        self.bump = bump
        self.c0 = float(c0)
        self.d0 = float(d0)
        self.rho = None if rho is None else float(rho)
        self.m = int(m)
        lam_s = self.lam**self.s_exp
        self._lam_s = lam_s
        self._lam_mc = self.lam ** (-self.c_exp)
        Q = bump.Q
        self._I2 = CumulativeSimpson(lambda u: np.exp((1.0 - lam_s) * u) * bump.q(u), self.m)
        self._Phi = CumulativeSimpson(phi, self.m)
        self._J = CumulativeSimpson(lambda u: np.exp(self._G(u)) * phi(u) * self._h2(u), self.m)

    def _G(self, u):
        return u / self._lam_s - self.eps * self._lam_mc * self.bump.Q * self._Phi(u)

    def _h2(self, u):
        return np.exp(-u) * (self.c0 - self.eps * self.d0 * self._I2(u))

    @property
    def kernel_integral(self) -> float:
        """J(1) = int_0^1 exp(G) phi h2."""
        return self._J.total

    def evaluate(self, sigma):
        s = np.asarray(sigma, dtype=float)
        if np.any(s < 0) or np.any(s > 1):
            raise ValueError("profile argument must lie in [0, 1]")
        h3 = self.d0 * np.exp(-self._lam_s * s)
        h2 = self._h2(s)
        h1 = self.eps * self._lam_mc * self.bump.P * np.exp(-self._G(s)) * self._J(s)
        return np.array([h1, h2, h3])

    def derivative(self, sigma, values=None):
        s = np.asarray(sigma, dtype=float)
        h1, h2, h3 = self.evaluate(s) if values is None else values
        p, q = self.bump.p(s), self.bump.q(s)
        e, lc = self.eps, self._lam_mc
        d1 = -(1.0 / self._lam_s - e * lc * q) * h1 + e * lc * p * h2
        d2 = -h2 - e * q * h3
        d3 = -self._lam_s * h3
        return np.array([d1, d2, d3])

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["exponent"] = self.exponent
        return d


def solve_h_triangular(variant, lam, exponent, bump: BumpProfile, c0, d0, m=DEFAULT_GRID) -> TriangularH:
    """Profiles for given (c0, d0) and bump amplitudes; no boundary condition imposed."""
    return TriangularH(variant, lam, exponent, bump, c0, d0, None, m)


def calibrate_triangular(variant, lam, exponent, bump: BumpProfile, rho_target, m=DEFAULT_GRID, solve_amplitude=True):
    """Impose h1(1) = rho c0, h2(1) = rho d0 with d0 = 1.

    c0 follows from the h2 condition. h2 does not involve P and h1 is linear
    in P, so the h1 condition fixes P in closed form. With
    ``solve_amplitude=False`` the amplitude in ``bump`` is kept and the h1
    condition is only checked.

    Returns (c0, d0, P, profile).
    """
    variant = HVariant(variant)
    s_exp, c_exp, eps = triangular_exponents(variant, lam, exponent)
    rho = float(rho_target)
    floor = rho_floor(variant, lam, exponent)
    if not (math.isfinite(rho) and rho > floor):
        raise InvalidRho(f"rho must exceed {floor:.17g} for {variant.value}, got {rho}")
    d0 = 1.0
    probe = TriangularH(variant, lam, exponent, bump.with_amplitudes(P=1.0), 0.0, d0, None, m)
    c0 = math.e * rho * d0 + eps * d0 * probe._I2.total
    unit = TriangularH(variant, lam, exponent, bump.with_amplitudes(P=1.0), c0, d0, rho, m)
    j1 = unit.kernel_integral
    g1 = float(unit._G(1.0))
    # h1(1) per unit amplitude
    per_unit = eps * lam ** (-c_exp) * math.exp(-g1) * j1
    target = rho * c0
    if solve_amplitude:
        mass = float(np.mean(np.abs(unit._J.g_nodes)))
        if not math.isfinite(per_unit) or abs(j1) <= 1e-12 * mass or per_unit == 0.0:
            raise DegenerateKernel("kernel integral vanishes; no amplitude meets the h1 boundary condition")
        P = target / per_unit
    else:
        P = bump.P
        miss = abs(P * per_unit - target)
        if miss > 1e-10 * (1.0 + abs(rho)) * (abs(c0) + abs(d0)):
            raise DegenerateKernel(
                f"amplitude P={P} gives h1(1)={P * per_unit:.6g}, need rho*c0={target:.6g}; "
                "no (c0, d0) with d0=1 closes the system for this bump"
            )
    h = TriangularH(variant, lam, exponent, bump.with_amplitudes(P=P), c0, d0, rho, m)
    d1, d2, scale = h.boundary_defect()
    if max(d1, d2) > 1e-10 * scale:
        raise ConstructionError(f"boundary conditions missed after calibration: {d1:.3g}, {d2:.3g}")
    return c0, d0, P, h
