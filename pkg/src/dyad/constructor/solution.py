"""Piecewise shell amplitudes glued from the profiles h on the knot grid.

With sigma_k(t) = lam**(s k) (t - t_k) the local time on [t_k, t_{k-1}),
shell j is nonzero only from t_{j+1} on:

    a_j = lam**((j+1)(s-c)) p(sigma_{j+1})       on [t_{j+1}, t_j)
        = -lam**(j (s-c)) q(sigma_j)             on [t_j, t_{j-1})
    b_j = rho**(-j-1) h1(sigma_{j+1})            on [t_{j+1}, t_j)
        = rho**(-j) h2(sigma_j)                  on [t_j, t_{j-1})
        = rho**(-j+1) h3(sigma_{j-1})            on [t_{j-1}, t_{j-2})
        = rho**(-j+1) h3(1) exp(-lam**(s j) (t - t_{j-2}))   afterwards

For the fractional NSE construction the pair (a, b) above is the half-sum
and half-difference (u, v) of two NSE solutions.
"""
from __future__ import annotations

import numpy as np

from ..core import ModelSpec, Variant, nonlinear_terms
from .bump import BumpProfile
from .hsystem import DEFAULT_GRID, HSolution, HVariant, TriangularH
from .monodromy import CoupledH
from .partition import Partition, make_partition

_COMPATIBLE = {
    Variant.MHD_FORWARD: HVariant.TRIANGULAR_FORWARD,
    Variant.MHD_MIXED: HVariant.TRIANGULAR_MIXED,
    Variant.MHD_FRACTIONAL: HVariant.TRIANGULAR_FRACTIONAL,
    Variant.NSE_FRACTIONAL: HVariant.COUPLED_GNSE,
}


def profile_variant(model: ModelSpec) -> HVariant:
    try:
        return _COMPATIBLE[model.variant]
    except KeyError:
        raise ValueError(f"no construction is available for {model.variant.value}") from None


def construction_exponent(model: ModelSpec) -> float:
    """theta for the theta forms, beta for fractional MHD, alpha for fractional NSE."""
    v = model.variant
    if v in (Variant.MHD_FORWARD, Variant.MHD_MIXED):
        return float(model.theta)
    if v is Variant.MHD_FRACTIONAL:
        return float(model.beta)
    if v is Variant.NSE_FRACTIONAL:
        return float(model.alpha)
    raise ValueError(f"no construction is available for {v.value}")


def time_exponent(model: ModelSpec) -> float:
    """s: 2 for the theta forms, 2 beta for fractional MHD, 2 alpha for fractional NSE."""
    v = model.variant
    if v in (Variant.MHD_FORWARD, Variant.MHD_MIXED):
        return 2.0
    if v is Variant.MHD_FRACTIONAL:
        return 2.0 * model.beta
    return 2.0 * model.alpha


class ConstructedSolution:
    """Closed-form shells a_j, b_j (or u_j, v_j) on [0, T]."""

    def __init__(self, model: ModelSpec, partition: Partition, bump: BumpProfile, h: HSolution, j_max: int):
        want = profile_variant(model)
        if h.variant is not want:
            raise ValueError(f"profile variant {h.variant.value} does not match model {model.variant.value}")
        if h.rho is None:
            raise ValueError("profile is not calibrated (no rho)")
        if abs(h.lam - model.lam) > 0 or abs(h.s_exp - partition.s_exp) > 1e-15 or partition.lam != model.lam:
            raise ValueError("model, partition and profile disagree on lambda or the time exponent")
        if abs(h.s_exp - time_exponent(model)) > 1e-15:
            raise ValueError("profile time exponent does not match the model dissipation")
        if model.variant is Variant.NSE_FRACTIONAL:
            if model.nu != 1.0:
                raise ValueError("the construction assumes unit viscosity")
        elif model.mu != 1.0:
            raise ValueError("the construction assumes unit resistivity")
        if bump.P != h.bump.P or bump.Q != h.bump.Q:
            raise ValueError("bump amplitudes differ from the ones the profile was built with")
        self.model = model
        self.partition = partition
        self.bump = bump
        self.h = h
        self.j_max = int(j_max)
        self.rho = float(h.rho)
        self.s = float(partition.s_exp)
        self.c = float(h.c_exp)
        self.h3_end = float(h.evaluate(np.array([1.0]))[2][0])

    @property
    def T(self) -> float:
        return self.partition.T

    @property
    def is_gnse(self) -> bool:
        return self.model.variant is Variant.NSE_FRACTIONAL

    @property
    def pair_coeffs(self):
        """Cascade coefficients of the system the pair (a, b) solves."""
        return (1.0, 1.0, 1.0) if self.is_gnse else self.model.cascade_coeffs

    def pair_damping(self, n):
        j = np.arange(n, dtype=float)
        pa, pb = self.model.dissipation_exponents
        da = self.model.nu * self.model.lam ** (pa * j)
        if self.is_gnse:
            return da, da.copy()
        return da, self.model.mu * self.model.lam ** (pb * j)

    def _check_times(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0) or np.any(t > self.T * (1 + 1e-12)) or not np.all(np.isfinite(t)):
            raise ValueError(f"constructed solution is defined on [0, {self.T:.17g}]")
        return np.minimum(t, self.T)

    def _ladder(self, e):
        return self.rho ** float(e)

    def branch(self, j: int, k: int, t, derivatives=True):
        """Branch k of shell j evaluated at ``t`` whatever interval t is in.

        Local times are clipped to [0, 1], so a knot can be approached from
        either side by choosing k. Returns (a_j, b_j, a_j', b_j').
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lam, s, c = self.model.lam, self.s, self.c
        part = self.partition
        z = np.zeros_like(t)
        if k >= j + 2:
            return z, z.copy(), z.copy(), z.copy()
        if k <= j - 2:
            rate = lam ** (s * j)
            b = self._ladder(-j + 1) * self.h3_end * np.exp(-rate * np.maximum(t - part.knot(j - 2), 0.0))
            return z, b, z.copy(), -rate * b
        sig = np.clip(part.scaled_time(k, t), 0.0, 1.0)
        rate = lam ** (s * k)
        H = self.h.evaluate(sig)
        dH = self.h.derivative(sig, H) if derivatives else None
        a = z.copy()
        da = z.copy()
        if k == j + 1:
            amp = lam ** ((j + 1) * (s - c))
            a = amp * self.bump.p(sig)
            if derivatives:
                da = amp * rate * self.bump.dp(sig)
            comp, lad = 0, self._ladder(-j - 1)
        elif k == j:
            amp = lam ** (j * (s - c))
            a = -amp * self.bump.q(sig)
            if derivatives:
                da = -amp * rate * self.bump.dq(sig)
            comp, lad = 1, self._ladder(-j)
        else:
            comp, lad = 2, self._ladder(-j + 1)
        b = lad * H[comp]
        db = lad * rate * dH[comp] if derivatives else z.copy()
        return a, b, da, db

    def shell(self, j: int, t, k=None, derivatives=True):
        """(a_j, b_j, a_j', b_j') at times ``t`` (1-d array) using the branch each time falls in."""
        t = self._check_times(t)
        if k is None:
            k = self.partition.branch_index(t)
        out = np.zeros((4, t.size))
        for kk in (j + 1, j, j - 1):
            m = k == kk
            if m.any():
                out[:, m] = self.branch(j, kk, t[m], derivatives)
        m = k <= j - 2
        if m.any():
            out[:, m] = self.branch(j, j - 2, t[m], derivatives)
        return out[0], out[1], out[2], out[3]

    def _local(self, j, t, k):
        """Fields of shells j-1, j, j+1 (ghosts zero) as a (4, 3, len(t)) array."""
        out = np.zeros((4, 3, t.size))
        for i, jj in enumerate((j - 1, j, j + 1)):
            if jj >= 0:
                out[:, i] = self.shell(jj, t, k)
        return out

    def shell_terms(self, j: int, t):
        """(forcing f_j, b-equation residual) for one shell, from shells j-1..j+1 only."""
        t = self._check_times(t)
        k = self.partition.branch_index(t)
        (am, a0, ap), (bm, b0, bp), (_, da0, _), (_, db0, _) = self._local(j, t, k)
        lam = self.model.lam
        lj = lam ** (self.c * j)
        lm = lam ** (self.c * (j - 1)) if j > 0 else 0.0
        c1, c2, c3 = self.pair_coeffs
        dmp_a, dmp_b = self.pair_damping(j + 1)
        nla = -c1 * (lj * a0 * ap - lm * am * am) - c3 * (lj * b0 * bp - lm * bm * bm)
        nlb = -c2 * (lj * a0 * bp - lm * am * bm) - c3 * (lj * b0 * ap - lm * am * bm)
        f = da0 + dmp_a[j] * a0 - nla
        r = db0 + dmp_b[j] * b0 - nlb
        return f, r

    def fields(self, t, n: int | None = None, derivatives=True):
        """Arrays (A, B, dA, dB) of shape (n + 1, len(t)) for shells 0..n."""
        n = self.j_max + 1 if n is None else int(n)
        t = self._check_times(t)
        k = self.partition.branch_index(t)
        out = np.zeros((4, n + 1, t.size))
        for j in range(n + 1):
            out[:, j] = self.shell(j, t, k, derivatives)
        return out[0], out[1], out[2], out[3]

    def a(self, j, t):
        return self.shell(j, np.atleast_1d(t), derivatives=False)[0]

    def b(self, j, t):
        return self.shell(j, np.atleast_1d(t), derivatives=False)[1]

    def forcing_values(self, t, n: int):
        """f_j(t) for j = 0..n: a_j' minus the unforced right-hand side of the a equation."""
        A, B, dA, _ = self.fields(t, n + 1)
        da, _ = self.pair_damping(n + 2)
        lam_c = self.model.lam ** (self.c * np.arange(n + 2))
        nla, _ = nonlinear_terms(A, B, lam_c, self.pair_coeffs)
        f = dA + da[:, None] * A - nla
        return f[: n + 1]

    def b_residual(self, t, n: int):
        """Defect of the b (or v) equation for shells 0..n."""
        A, B, _, dB = self.fields(t, n + 1)
        _, db = self.pair_damping(n + 2)
        lam_c = self.model.lam ** (self.c * np.arange(n + 2))
        _, nlb = nonlinear_terms(A, B, lam_c, self.pair_coeffs)
        r = dB + db[:, None] * B - nlb
        return r[: n + 1]

    def nse_pair(self, t, n: int | None = None):
        """Two NSE solutions u + v and u - v (fractional NSE construction only)."""
        if not self.is_gnse:
            raise ValueError("only the fractional NSE construction carries a solution pair")
        A, B, _, _ = self.fields(t, n, derivatives=False)
        return A + B, A - B

    def shell_breakpoints(self, j: int):
        """Knots where shell j changes branch, clipped to [0, T]."""
        ks = np.arange(j - 2, j + 2)
        pts = self.partition.knot(ks)
        return np.sort(pts[(pts > 0) & (pts <= self.T)])

    def breakpoints(self, n: int, t_end: float | None = None):
        t_end = self.T if t_end is None else t_end
        ks = np.arange(0, n + 3)
        pts = self.partition.knot(ks)
        pts = pts[(pts > 0) & (pts < t_end)]
        return np.unique(np.concatenate([[0.0], pts, [t_end]]))

    def to_manifest(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "partition": {"lambda": self.partition.lam, "s_exp": self.partition.s_exp, "T": self.T},
            "bump": {"family": self.bump.family.value, "P": self.bump.P, "Q": self.bump.Q},
            "profile": self.h.to_dict(),
            "j_max": self.j_max,
        }

    @classmethod
    def from_manifest(cls, d: dict) -> "ConstructedSolution":
        model = ModelSpec.from_dict(d["model"])
        prof = d["profile"]
        bump = BumpProfile(float(d["bump"]["P"]), float(d["bump"]["Q"]))
        variant = HVariant(prof["variant"])
        if variant is HVariant.COUPLED_GNSE:
            h = CoupledH(model.lam, prof["exponent"], bump, prof["c0"], prof["d0"], prof["rho"], int(prof["grid_M"]))
        else:
            h = TriangularH(variant, model.lam, prof["exponent"], bump, prof["c0"], prof["d0"], prof["rho"], int(prof["grid_M"]))
        part = make_partition(model.lam, d["partition"]["s_exp"], max(2, int(d["j_max"])))
        return cls(model, part, bump, h, int(d["j_max"]))


def assemble_solution(model: ModelSpec, partition: Partition, bump: BumpProfile, h: HSolution, j_max: int) -> ConstructedSolution:
    return ConstructedSolution(model, partition, bump, h, j_max)


def default_rho(model: ModelSpec) -> float:
    """lam * lam**theta for the theta forms, lam**2 for fractional MHD, lam for fractional NSE."""
    v = model.variant
    if v in (Variant.MHD_FORWARD, Variant.MHD_MIXED):
        return model.lam * model.lam**model.theta
    if v is Variant.MHD_FRACTIONAL:
        return model.lam**2
    return model.lam


def construct(model: ModelSpec, rho=None, Q=0.0, j_max=12, m=DEFAULT_GRID, search=None, P=None, d0=1.0) -> ConstructedSolution:
    """Calibrate the profiles for ``model`` and glue them into shells 0..j_max.

    ``P`` given: the amplitude is kept and only checked against the boundary
    condition (triangular variants). ``d0`` rescales the calibrated (c0, d0);
    the profile system is linear, so this rescales b and leaves a unchanged.
    """
    from .hsystem import calibrate_triangular
    from .monodromy import calibrate_monodromy_gnse

    d0 = float(d0)
    if not (np.isfinite(d0) and d0 != 0.0):
        raise ValueError("d0 must be finite and nonzero")
    variant = profile_variant(model)
    expo = construction_exponent(model)
    part = make_partition(model.lam, time_exponent(model), max(2, j_max))
    if variant is HVariant.COUPLED_GNSE:
        R = model.lam if rho is None else float(rho)
        c0, d0_cal, rho_found, bump, h = calibrate_monodromy_gnse(model.lam, expo, R, search)
        if d0 != 1.0:
            k = d0 / d0_cal if d0_cal != 0 else d0
            h = CoupledH(model.lam, expo, bump, k * c0, k * d0_cal, rho_found, h.m)
    else:
        rho = default_rho(model) if rho is None else float(rho)
        amp = 1.0 if P is None else float(P)
        c0, _, _, h = calibrate_triangular(variant, model.lam, expo, BumpProfile(amp, float(Q)), rho, m, solve_amplitude=P is None)
        bump = h.bump
        if d0 != 1.0:
            h = TriangularH(variant, model.lam, expo, bump, d0 * c0, d0, h.rho, h.m)
    return ConstructedSolution(model, part, bump, h, j_max)


def amplitude_scale(sol: ConstructedSolution) -> float:
    """Largest prefactor-free profile size, used to make tolerances relative."""
    return max(abs(sol.bump.P), abs(sol.bump.Q), float(np.max(np.abs(sol.h.samples))), 1.0)


__all__ = [
    "ConstructedSolution",
    "assemble_solution",
    "construct",
    "default_rho",
    "amplitude_scale",
]
