"""Dyadic shell models: model descriptions, truncated states, norms and the
shared right-hand side.

Every variant is written in the common form

    da_j/dt = f_j - nu * lam_j**pa * a_j
              - c1 * (lam_j**k a_j a_{j+1} - lam_{j-1}**k a_{j-1}**2)
              - c3 * (lam_j**k b_j b_{j+1} - lam_{j-1}**k b_{j-1}**2)
    db_j/dt = - mu * lam_j**pb * b_j
              - c2 * (lam_j**k a_j b_{j+1} - lam_{j-1}**k a_{j-1} b_{j-1})
              - c3 * (lam_j**k b_j a_{j+1} - lam_{j-1}**k a_{j-1} b_{j-1})

with lam_j = lam**j, ghost shells a_{-1} = a_{N+1} = 0 (same for b), a
coupling exponent k, and dissipation exponents pa, pb. The variants only
differ in (k, pa, pb) and the cascade coefficients (c1, c2, c3).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class Variant(str, enum.Enum):
    GENERAL_MHD = "GeneralMHD"
    MHD_FORWARD = "MHDForward"
    MHD_MIXED = "MHDMixed"
    NSE_CLASSIC = "NSEClassic"
    NSE_FRACTIONAL = "NSEFractional"
    MHD_FRACTIONAL = "MHDFractional"


PRESET_COEFFS = {
    Variant.MHD_FORWARD: (1.0, -1.0, 1.0),
    Variant.MHD_MIXED: (1.0, 1.0, -1.0),
    Variant.NSE_CLASSIC: (1.0, 0.0, 0.0),
    Variant.NSE_FRACTIONAL: (1.0, 0.0, 0.0),
    Variant.MHD_FRACTIONAL: (1.0, -1.0, 1.0),
}

_THETA_FORMS = (Variant.GENERAL_MHD, Variant.MHD_FORWARD, Variant.MHD_MIXED, Variant.NSE_CLASSIC)
_NSE_FORMS = (Variant.NSE_CLASSIC, Variant.NSE_FRACTIONAL)


class ModelError(ValueError):
    """Inconsistent model parameters or a state that does not fit the model."""


def theta_from_intermittency(delta: float) -> float:
    """Nonlinearity exponent for intermittency dimension ``delta`` in [0, 3]."""
    if not 0.0 <= delta <= 3.0:
        raise ModelError(f"intermittency dimension must lie in [0, 3], got {delta}")
    return (5.0 - delta) / 2.0


@dataclass(frozen=True)
class ModelSpec:
    """Which dyadic system to use and its parameters.

    ``theta`` is required by the theta-form variants (GeneralMHD, MHDForward,
    MHDMixed, NSEClassic); ``alpha`` by NSEFractional and MHDFractional;
    ``beta`` by MHDFractional. ``cascade_coeffs`` is only read for GeneralMHD,
    the presets pin their own.
    """

    variant: Variant
    lam: float
    theta: float | None = None
    alpha: float | None = None
    beta: float | None = None
    nu: float = 1.0
    mu: float = 1.0
    cascade_coeffs: tuple[float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        v = self.variant
        if not (math.isfinite(self.lam) and self.lam > 1.0):
            raise ModelError(f"lambda must be > 1, got {self.lam}")
        if self.nu < 0 or self.mu < 0 or not (math.isfinite(self.nu) and math.isfinite(self.mu)):
            raise ModelError("viscosity and resistivity must be finite and >= 0")
        if v in _THETA_FORMS:
            if self.theta is None or not self.theta > 0:
                raise ModelError(f"{v.value} requires theta > 0")
        else:
            if self.alpha is None or not self.alpha > 0:
                raise ModelError(f"{v.value} requires alpha > 0")
            if v is Variant.MHD_FRACTIONAL and (self.beta is None or not self.beta > 0):
                raise ModelError("MHDFractional requires beta > 0")
        if v is Variant.GENERAL_MHD:
            if self.cascade_coeffs is None or len(self.cascade_coeffs) != 3:
                raise ModelError("GeneralMHD requires cascade_coeffs (alpha1, alpha2, alpha3)")
            object.__setattr__(self, "cascade_coeffs", tuple(float(c) for c in self.cascade_coeffs))
        else:
            preset = PRESET_COEFFS[v]
            if self.cascade_coeffs is not None and tuple(self.cascade_coeffs) != preset:
                raise ModelError(f"{v.value} fixes cascade_coeffs to {preset}")
            object.__setattr__(self, "cascade_coeffs", preset)

    # convenience constructors
    @classmethod
    def forward(cls, lam, theta, nu=1.0, mu=1.0):
        return cls(Variant.MHD_FORWARD, lam, theta=theta, nu=nu, mu=mu)

    @classmethod
    def mixed(cls, lam, theta, nu=1.0, mu=1.0):
        return cls(Variant.MHD_MIXED, lam, theta=theta, nu=nu, mu=mu)

    @classmethod
    def nse(cls, lam, theta, nu=1.0):
        return cls(Variant.NSE_CLASSIC, lam, theta=theta, nu=nu, mu=0.0)

    @classmethod
    def nse_fractional(cls, lam, alpha, nu=1.0):
        return cls(Variant.NSE_FRACTIONAL, lam, alpha=alpha, nu=nu, mu=0.0)

    @classmethod
    def mhd_fractional(cls, lam, alpha, beta, nu=1.0, mu=1.0):
        return cls(Variant.MHD_FRACTIONAL, lam, alpha=alpha, beta=beta, nu=nu, mu=mu)

    @property
    def is_nse(self) -> bool:
        return self.variant in _NSE_FORMS

    @property
    def coupling_exponent(self) -> float:
        """Exponent k of the nonlinear coefficient lam_j**k."""
        return float(self.theta) if self.variant in _THETA_FORMS else 1.0

    @property
    def dissipation_exponents(self) -> tuple[float, float]:
        """(pa, pb): the dissipation multipliers are lam_j**pa and lam_j**pb."""
        v = self.variant
        if v in _THETA_FORMS:
            return 2.0, 2.0
        if v is Variant.NSE_FRACTIONAL:
            return 2.0 * self.alpha, 2.0 * self.alpha
        return 2.0 * self.alpha, 2.0 * self.beta

    def shell_scales(self, n_shells: int) -> np.ndarray:
        return self.lam ** np.arange(n_shells, dtype=float)

    def coupling(self, n_shells: int) -> np.ndarray:
        """lam_j**k for j = 0..n_shells-1."""
        return self.lam ** (self.coupling_exponent * np.arange(n_shells, dtype=float))

    def damping(self, n_shells: int) -> tuple[np.ndarray, np.ndarray]:
        """Linear decay rates (nu lam_j**pa, mu lam_j**pb)."""
        pa, pb = self.dissipation_exponents
        j = np.arange(n_shells, dtype=float)
        da = self.nu * self.lam ** (pa * j)
        db = 0.0 * j if self.is_nse else self.mu * self.lam ** (pb * j)
        return da, db

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "lambda": self.lam,
            "theta": self.theta,
            "alpha": self.alpha,
            "beta": self.beta,
            "nu": self.nu,
            "mu": self.mu,
            "cascade_coeffs": list(self.cascade_coeffs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        coeffs = d.get("cascade_coeffs")
        return cls(
            Variant(d["variant"]),
            float(d["lambda"]),
            theta=d.get("theta"),
            alpha=d.get("alpha"),
            beta=d.get("beta"),
            nu=float(d.get("nu", 1.0)),
            mu=float(d.get("mu", 1.0)),
            cascade_coeffs=tuple(coeffs) if coeffs is not None and d["variant"] == "GeneralMHD" else None,
        )


@dataclass(frozen=True)
class ShellState:
    """Truncated amplitudes a_0..a_N, b_0..b_N at one time."""

    a: np.ndarray
    b: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape or a.size == 0:
            raise ModelError(f"a and b must be 1-d of equal nonzero length, got {a.shape} and {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ModelError("state entries must be finite")
        if not (math.isfinite(self.time) and self.time >= 0):
            raise ModelError(f"time must be finite and >= 0, got {self.time}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_shells(self) -> int:
        """Truncation index N (the state stores N + 1 shells)."""
        return self.a.size - 1

    @classmethod
    def zeros(cls, n: int, time: float = 0.0) -> "ShellState":
        return cls(np.zeros(n + 1), np.zeros(n + 1), time)


@dataclass(frozen=True)
class NormReport:
    l2_a: float
    l2_b: float
    energy: float
    cross_helicity: float
    sobolev: dict = field(default_factory=dict)


def _shift_down(x):
    """x_{j-1} along axis 0, with x_{-1} = 0."""
    out = np.zeros_like(x)
    out[1:] = x[:-1]
    return out


def _shift_up(x):
    """x_{j+1} along axis 0, with x_{N+1} = 0."""
    out = np.zeros_like(x)
    out[:-1] = x[1:]
    return out


def nonlinear_terms(a, b, coupling, coeffs):
    """Quadratic parts of da/dt and db/dt.

    ``a`` and ``b`` carry shells along axis 0 and may have trailing axes
    (for example time); ``coupling`` holds lam_j**k for the same shells.
    """
    c1, c2, c3 = coeffs
    lam_c = np.reshape(coupling, (-1,) + (1,) * (np.ndim(a) - 1))
    lam_cm = _shift_down(lam_c)
    a_up, b_up = _shift_up(a), _shift_up(b)
    a_dn, b_dn = _shift_down(a), _shift_down(b)
    cross_dn = lam_cm * a_dn * b_dn
    nla = -c1 * (lam_c * a * a_up - lam_cm * a_dn**2) - c3 * (lam_c * b * b_up - lam_cm * b_dn**2)
    nlb = -c2 * (lam_c * a * b_up - cross_dn) - c3 * (lam_c * b * a_up - cross_dn)
    return nla, nlb


def _check_model_state(model: ModelSpec, state: ShellState):
    if model.is_nse and np.any(state.b != 0.0):
        raise ModelError(f"{model.variant.value} carries no magnetic field; b must be identically zero")


def rhs(model: ModelSpec, state: ShellState, forcing_values: Sequence[float]) -> np.ndarray:
    """Time derivative of the truncated system, returned as (da..., db...)."""
    f = np.asarray(forcing_values, dtype=float)
    n = state.a.size
    if f.shape != (n,):
        raise ModelError(f"forcing has shape {f.shape}, expected ({n},)")
    if not np.all(np.isfinite(f)):
        raise ModelError("forcing values must be finite")
    _check_model_state(model, state)
    da_rate, db_rate = model.damping(n)
    nla, nlb = nonlinear_terms(state.a, state.b, model.coupling(n), model.cascade_coeffs)
    da = f - da_rate * state.a + nla
    db = -db_rate * state.b + nlb
    if model.is_nse:
        db = np.zeros(n)
    return np.concatenate([da, db])


def energy(state: ShellState) -> float:
    return 0.5 * float(np.dot(state.a, state.a) + np.dot(state.b, state.b))


def cross_helicity(state: ShellState) -> float:
    return float(np.dot(state.a, state.b))


def sobolev_norm(state: ShellState, s: float, lam: float) -> tuple[float, float]:
    """(||a||_s, ||b||_s) with ||x||_s**2 = sum_j lam_j**(2s) x_j**2."""
    if s == 0:
        return float(np.linalg.norm(state.a)), float(np.linalg.norm(state.b))
    w = lam ** (2.0 * s * np.arange(state.a.size))
    return float(np.sqrt(np.sum(w * state.a**2))), float(np.sqrt(np.sum(w * state.b**2)))


def norm_report(state: ShellState, lam: float, orders: Sequence[float] = (1.0,)) -> NormReport:
    l2a, l2b = sobolev_norm(state, 0, lam)
    return NormReport(
        l2_a=l2a,
        l2_b=l2b,
        energy=energy(state),
        cross_helicity=cross_helicity(state),
        sobolev={float(s): sobolev_norm(state, s, lam) for s in orders},
    )


def nonlinear_energy_flux(model: ModelSpec, state: ShellState) -> float:
    """Total nonlinear contribution to dE/dt, sum_j a_j NLa_j + b_j NLb_j."""
    _check_model_state(model, state)
    n = state.a.size
    nla, nlb = nonlinear_terms(state.a, state.b, model.coupling(n), model.cascade_coeffs)
    return float(np.dot(state.a, nla) + np.dot(state.b, nlb))


def cross_helicity_flux(model: ModelSpec, state: ShellState) -> float:
    """Nonlinear contribution to dH^c/dt, sum_j a_j NLb_j + b_j NLa_j."""
    _check_model_state(model, state)
    n = state.a.size
    nla, nlb = nonlinear_terms(state.a, state.b, model.coupling(n), model.cascade_coeffs)
    return float(np.dot(state.a, nlb) + np.dot(state.b, nla))


def cross_helicity_witness(n: int = 16) -> ShellState:
    """a = (1/2, 1/2, 0, ...), b = (1/2, 0, ...): the forward cascade moves
    cross helicity at rate -1/4 here, the mixed cascade does not."""
    a = np.zeros(n + 1)
    b = np.zeros(n + 1)
    a[:2] = 0.5
    b[0] = 0.5
    return ShellState(a, b)
