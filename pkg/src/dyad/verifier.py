"""Runnable checks for constructed solutions and Galerkin runs.

* construction checks: b-equation residuals, knot continuity, decay slopes,
  forcing summability and the energy identity, gathered in a
  :class:`VerificationReport`;
* the non-uniqueness demonstration (constructed branch against a Galerkin
  branch that keeps b = 0 under the same forcing);
* the uniqueness-regime demonstration (several discretizations of one
  solution at theta <= 2);
* the weak-strong distance functional with its Gronwall envelope.

Every pass flag compares a measured number with an entry of ``THRESHOLDS``.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constructor.forcing import ForcingSpec, synthesize_forcing
from .constructor.solution import ConstructedSolution, construct
from .core import ModelError, ModelSpec, ShellState, Variant, nonlinear_terms
from .galerkin import IntegratorConfig, Trajectory, energy_budget, integrate
from .quadrature import gauss_legendre_nodes, simpson_samples

THRESHOLDS = {
    "residual": 1e-9,
    "continuity": 1e-10,
    "decay_slope": 0.05,
    "forcing_ratio": (0.3, 0.8),
    "forcing_tail": 0.01,
    "energy_identity": 1e-6,
    "calibration": 1e-10,
    "separation": 1e-3,
    "budget": 1e-6,
    "divergence": 1e-6,
    "gronwall_roundoff": 1e-12,
}

DECAY_WINDOW = (3, 12)
FORCING_WINDOW = (4, 10)
RESIDUAL_POINTS = 10_000


def _branch_grid(part, k, points, t_max):
    """``points`` times in [t_k, t_{k-1}) clipped to the domain."""
    lo = float(part.knot(k))
    hi = min(float(part.knot(k - 1)), t_max)
    if hi <= lo:
        return np.empty(0)
    return np.linspace(lo, hi, points, endpoint=hi < float(part.knot(k - 1)))


def _sup_grid(sol: ConstructedSolution, n: int, points: int = 513):
    """Times resolving every branch of shells 0..n."""
    part = sol.partition
    ts = [_branch_grid(part, k, points, sol.T) for k in range(1, n + 3)]
    ts.append(np.array([0.0, sol.T]))
    return np.unique(np.concatenate(ts))


# ----------------------------------------------------------------------------
# construction checks


def b_residuals(sol: ConstructedSolution, j_max: int = 12, points: int = RESIDUAL_POINTS):
    """sup |residual of the b equation| per (shell, branch), scale-relative.

    Branches of shell j are the intervals [t_k, t_{k-1}) for k = j+1, j, j-1
    and the exponential tail after t_{j-2}. The scale is
    lam**(s j) |rho|**(1-j) max|h|.
    """
    part = sol.partition
    hmax = float(np.max(np.abs(sol.h.samples)))
    rho = abs(sol.rho)
    out = {}
    for j in range(j_max + 1):
        scale = sol.model.lam ** (sol.s * j) * rho ** (1 - j) * hmax
        for k in (j + 1, j, j - 1):
            if k < 1:
                continue
            t = _branch_grid(part, k, points, sol.T)
            _, r = sol.shell_terms(j, t)
            out[(j, str(k))] = float(np.max(np.abs(r))) / scale
        if j - 2 >= 1:
            t = np.linspace(float(part.knot(j - 2)), sol.T, points)
            _, r = sol.shell_terms(j, t)
            out[(j, "tail")] = float(np.max(np.abs(r))) / scale
    return out


def continuity_gaps(sol: ConstructedSolution, j_max: int = 12):
    """|b_j(t_k-) - b_j(t_k+)| / |rho|**(1-j) at the four knots of shell j.

    Left and right limits come from evaluating the two adjacent branch
    formulas at the knot itself.
    """
    part = sol.partition
    rho = abs(sol.rho)
    out = {}
    for j in range(j_max + 1):
        for k in (j + 1, j, j - 1, j - 2):
            if k < 1:
                continue
            tk = np.array([float(part.knot(k))])
            left = sol.branch(j, k + 1, tk, derivatives=False)[1][0]
            right = sol.branch(j, k, tk, derivatives=False)[1][0]
            out[(j, k)] = abs(left - right) / rho ** (1 - j)
    return out


@dataclass(frozen=True)
class DecayFit:
    slope_a: float
    slope_b: float
    expected_a: float
    expected_b: float
    window: tuple
    sup_a: list
    sup_b: list


def decay_slopes(sol: ConstructedSolution, window=DECAY_WINDOW) -> DecayFit:
    """Least-squares slopes of log sup_t|a_j| and log sup_t|b_j| against j."""
    lo, hi = window
    t = _sup_grid(sol, hi)
    A, B, _, _ = sol.fields(t, hi, derivatives=False)
    sa = np.max(np.abs(A), axis=1)
    sb = np.max(np.abs(B), axis=1)
    j = np.arange(lo, hi + 1)
    slope_a = float(np.polyfit(j, np.log(sa[lo : hi + 1]), 1)[0])
    slope_b = float(np.polyfit(j, np.log(sb[lo : hi + 1]), 1)[0])
    lam = sol.model.lam
    return DecayFit(
        slope_a,
        slope_b,
        (sol.s - sol.c) * math.log(lam),
        -math.log(abs(sol.rho)),
        (lo, hi),
        sa.tolist(),
        sb.tolist(),
    )


@dataclass(frozen=True)
class ForcingSums:
    increments: list  # Delta_j = lam_j**(-p) int_0^T f_j**2
    partial_sums: list
    ratios: list  # Delta_{j+1} / Delta_j
    fitted_ratio: float
    tail: float

    @property
    def total(self) -> float:
        return self.partial_sums[-1]


def forcing_partial_sums(sol: ConstructedSolution, J: int = 12, order: int = 20, per_piece: int = 8) -> ForcingSums:
    """Partial sums of sum_j lam_j**(-p) int_0^T f_j**2 with p the velocity dissipation exponent.

    Each shell is integrated piece by piece between the knots where its
    forcing changes formula. The tail beyond J is the geometric continuation
    of the increments fitted over j in [4, J].
    """
    lam = sol.model.lam
    pa = sol.model.dissipation_exponents[0]
    inc = []
    for j in range(J + 1):
        ks = np.arange(max(j - 3, 0), j + 3)
        bp = np.concatenate([[0.0, sol.T], sol.partition.knot(ks)])
        bp = np.unique(bp[(bp >= 0) & (bp <= sol.T)])
        x, w = gauss_legendre_nodes(bp, order, per_piece)
        f, _ = sol.shell_terms(j, x)
        inc.append(float(np.sum(w * f * f)) * lam ** (-pa * j))
    inc = np.array(inc)
    S = np.cumsum(inc)
    ratios = inc[1:] / inc[:-1]
    lo = FORCING_WINDOW[0]
    jj = np.arange(lo, J + 1)
    r = float(np.exp(np.polyfit(jj, np.log(inc[lo:]), 1)[0]))
    tail = inc[-1] * r / (1.0 - r) if r < 1 else math.inf
    return ForcingSums(inc.tolist(), S.tolist(), ratios.tolist(), r, float(tail))


@dataclass(frozen=True)
class IdentityResult:
    """Energy identity E(t) + D(t) - W(t) = 0 for shells 0..j_max plus a tail bound."""

    t: float
    j_max: int
    truncated: float  # |sum_{j <= j_max} (E_j + D_j - W_j)|
    tail: float  # geometric bound for the shells beyond j_max
    scale: float  # sum_j (|E_j| + |D_j| + |W_j|)
    per_shell: list

    @property
    def defect(self) -> float:
        return self.truncated + self.tail

    @property
    def relative(self) -> float:
        return self.defect / self.scale if self.scale > 0 else self.defect


def _identity_one(E, D, W, t, j_max):
    per = E + D - W
    m = np.abs(E) + np.abs(D) + np.abs(W)
    scale = float(np.sum(m))
    lo = max(1, j_max - 3)
    mm = m[lo:]
    if scale == 0.0 or np.all(mm == 0):
        tail = 0.0
    elif np.any(mm <= 0):
        tail = math.inf
    else:
        r = float(np.exp(np.polyfit(np.arange(lo, j_max + 1), np.log(mm), 1)[0]))
        tail = float(m[-1] * r / (1.0 - r)) if r < 1 else math.inf
    return IdentityResult(float(t), int(j_max), float(abs(np.sum(per))), tail, scale, per.tolist())


def check_energy_identity(solution, forcing: ForcingSpec | None = None, t: float | None = None, j_max: int = 20, order: int = 20, per_piece: int = 8) -> IdentityResult:
    """Energy identity of a constructed solution on [0, t].

    E_j = (a_j**2 + b_j**2)(t) / 2, D_j the dissipation integral and W_j the
    work of f_j, all by Gauss-Legendre on the pieces between knots. For the
    fractional NSE construction both NSE solutions u + v and u - v are checked
    and the larger relative defect is returned.
    """
    T = solution.T
    t = T if t is None else float(t)
    if not (0.0 < t <= T * (1 + 1e-12)):
        raise ValueError(f"t must lie in (0, {T:.17g}]")
    t = min(t, T)
    bp = solution.breakpoints(j_max, t)
    x, w = gauss_legendre_nodes(bp, order, per_piece)
    n = j_max
    A, B, _, _ = solution.fields(x, n, derivatives=False)
    At, Bt, _, _ = solution.fields(np.array([t]), n, derivatives=False)
    if forcing is None:
        F = solution.forcing_values(x, n)
    else:
        F = forcing.evaluate(x, n + 1)
    da, db = solution.pair_damping(n + 1)
    if getattr(solution, "is_gnse", False):
        best = None
        for sign in (1.0, -1.0):
            U = A + sign * B
            Ut = (At + sign * Bt)[:, 0]
            E = 0.5 * Ut**2
            D = (U**2 * da[:, None]) @ w
            W = (F * U) @ w
            res = _identity_one(E, D, W, t, j_max)
            if best is None or res.relative > best.relative:
                best = res
        return best
    E = 0.5 * (At[:, 0] ** 2 + Bt[:, 0] ** 2)
    D = (A**2 * da[:, None] + B**2 * db[:, None]) @ w
    W = (F * A) @ w
    return _identity_one(E, D, W, t, j_max)


def initial_data_max(sol: ConstructedSolution, n: int = 12) -> float:
    A, B, _, _ = sol.fields(np.array([0.0]), n, derivatives=False)
    return float(max(np.max(np.abs(A)), np.max(np.abs(B))))


def separation(sol: ConstructedSolution, n: int = 12) -> float:
    """sup_t ||b(t)||_l2 over shells 0..n."""
    t = _sup_grid(sol, n)
    _, B, _, _ = sol.fields(t, n, derivatives=False)
    return float(np.max(np.sqrt(np.sum(B * B, axis=0))))


@dataclass
class VerificationReport:
    residual_sup: dict = field(default_factory=dict)
    continuity_gaps: dict = field(default_factory=dict)
    decay_slopes: tuple = ()
    forcing_partial_sums: list = field(default_factory=list)
    energy_identity_defect: float = math.nan
    separation: float = math.nan
    passed: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.passed) and all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "residual_sup": {f"{j}:{k}": v for (j, k), v in self.residual_sup.items()},
            "continuity_gaps": {f"{j}:{k}": v for (j, k), v in self.continuity_gaps.items()},
            "decay_slopes": list(self.decay_slopes),
            "forcing_partial_sums": list(self.forcing_partial_sums),
            "energy_identity_defect": self.energy_identity_defect,
            "separation": self.separation,
            "pass": dict(self.passed),
            "thresholds": {k: list(v) if isinstance(v, tuple) else v for k, v in THRESHOLDS.items()},
            "details": self.details,
        }


def verify_construction(sol: ConstructedSolution, j_max: int = 12, identity_jmax: int = 20, points: int = RESIDUAL_POINTS, workers: int = 1) -> VerificationReport:
    """All construction checks; independent checks may run on a thread pool."""
    jobs = {
        "residual": lambda: b_residuals(sol, j_max, points),
        "continuity": lambda: continuity_gaps(sol, j_max),
        "decay": lambda: decay_slopes(sol, (DECAY_WINDOW[0], j_max)),
        "forcing": lambda: forcing_partial_sums(sol, j_max),
        "identity": lambda: check_energy_identity(sol, j_max=identity_jmax),
    }
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {k: pool.submit(f) for k, f in jobs.items()}
            res = {k: futs[k].result() for k in jobs}
    else:
        res = {k: f() for k, f in jobs.items()}
    d1, d2, scale = sol.h.boundary_defect()
    fit: DecayFit = res["decay"]
    fs: ForcingSums = res["forcing"]
    ident: IdentityResult = res["identity"]
    lo, hi = FORCING_WINDOW
    window_ratios = fs.ratios[lo:hi + 1]
    rlo, rhi = THRESHOLDS["forcing_ratio"]
    init = initial_data_max(sol, j_max)
    passed = {
        "calibration": max(d1, d2) <= THRESHOLDS["calibration"] * scale,
        "residual": max(res["residual"].values()) <= THRESHOLDS["residual"],
        "continuity": max(res["continuity"].values()) <= THRESHOLDS["continuity"],
        "decay_a": abs(fit.slope_a - fit.expected_a) <= THRESHOLDS["decay_slope"],
        "decay_b": abs(fit.slope_b - fit.expected_b) <= THRESHOLDS["decay_slope"],
        "forcing_ratio": all(rlo <= r <= rhi for r in window_ratios),
        "forcing_tail": fs.tail < THRESHOLDS["forcing_tail"] * fs.total,
        "energy_identity": ident.relative <= THRESHOLDS["energy_identity"],
        "zero_initial_data": init == 0.0,
    }
    passed = {k: bool(v) for k, v in passed.items()}
    details = {
        "calibration_defects": [d1, d2, scale],
        "decay_expected": [fit.expected_a, fit.expected_b],
        "decay_sup_a": fit.sup_a,
        "decay_sup_b": fit.sup_b,
        "forcing_increments": fs.increments,
        "forcing_ratios": fs.ratios,
        "forcing_fitted_ratio": fs.fitted_ratio,
        "forcing_tail": fs.tail,
        "identity_truncated": ident.truncated,
        "identity_tail": ident.tail,
        "identity_scale": ident.scale,
        "identity_relative": ident.relative,
        "identity_jmax": identity_jmax,
        "initial_data_max": init,
        "rho": sol.rho,
        "P": sol.bump.P,
        "Q": sol.bump.Q,
    }
    return VerificationReport(
        residual_sup=res["residual"],
        continuity_gaps=res["continuity"],
        decay_slopes=(fit.slope_a, fit.slope_b, fit.window),
        forcing_partial_sums=fs.partial_sums,
        energy_identity_defect=ident.relative,
        separation=separation(sol, j_max),
        passed=passed,
        details=details,
    )


# ----------------------------------------------------------------------------
# trajectories of constructed solutions


def solution_trajectory(sol: ConstructedSolution, times, n: int) -> Trajectory:
    """Shells 0..n of a constructed solution sampled at ``times`` (uniform grid)."""
    times = np.asarray(times, dtype=float)
    A, B, _, _ = sol.fields(times, n, derivatives=False)
    dt = float(times[1] - times[0]) if times.size > 1 else 0.0
    return Trajectory(sol.model, times, A.T.copy(), B.T.copy(), synthesize_forcing(sol), dt, None, "closed-form")


def subsample(traj: Trajectory, step: int) -> Trajectory:
    """Every ``step``-th sample (the last sample is kept when it falls on the stride)."""
    sl = slice(None, None, int(step))
    return Trajectory(traj.model, traj.times[sl], traj.a[sl], traj.b[sl], traj.forcing_used, traj.dt, traj.richardson_diff, traj.backend)


# ----------------------------------------------------------------------------
# weak-strong distance


def _envelope_profile(model: ModelSpec, n: int):
    """(a-envelope, b-envelope, absorption factor) of the decay assumption on the strong solution."""
    lam = model.lam
    j = np.arange(n, dtype=float)
    if model.variant is Variant.MHD_FRACTIONAL:
        al, be = model.alpha, model.beta
        env_a = lam ** ((2 * al - 1) * j) + lam ** ((2 * be - 1) * j)
        env_b = lam ** ((al + be - 1) * j)
        k = max(1 + lam ** (2 * al - 1) + lam ** (-2 * al), 1 + lam ** (2 * be - 1) + lam ** (-2 * be))
        return env_a, env_b, k
    if model.theta is None:
        raise ModelError(f"no decay assumption is formulated for {model.variant.value}")
    th = model.theta
    env = lam ** ((2 - th) * j)
    return env, env.copy(), 1 + lam ** (2 - th) + lam**-2


def empirical_C0(traj: Trajectory):
    """C0(J) = smallest constant with |a_j|, |b_j| <= C0 * envelope_j for all j >= J along the run."""
    n = traj.a.shape[1]
    env_a, env_b, _ = _envelope_profile(traj.model, n)
    ra = np.max(np.abs(traj.a), axis=0) / env_a
    rb = np.max(np.abs(traj.b), axis=0) / env_b
    r = np.maximum(ra, rb)
    # C0(J) for J = 0..n; J = n means no shell left
    tailmax = np.maximum.accumulate(r[::-1])[::-1]
    return np.concatenate([tailmax, [0.0]])


@dataclass
class WeakStrongResult:
    times: np.ndarray
    distance: np.ndarray  # sum_j (a_j - u_j)**2 + (b_j - v_j)**2
    lhs: np.ndarray  # distance plus twice the dissipation of the difference
    rhs: np.ndarray  # initial distance plus the integrated nonlinear and forcing terms
    remainder: np.ndarray  # lhs - rhs, the discrete defect of the identity
    envelope: np.ndarray  # max_{s<=t} |remainder(s)| exp(C1 t)
    C0: float
    J: int
    C1: float
    absorbed: bool  # C0 * factor <= 2
    terms: dict | None = None  # the six textbook series I1..I6 (forward coefficients); work = -2 * their sum

    @property
    def within_envelope(self) -> bool:
        return bool(np.all(self.distance <= self.envelope + THRESHOLDS["gronwall_roundoff"]))

    def to_dict(self) -> dict:
        return {
            "C0": self.C0,
            "J": self.J,
            "C1": self.C1,
            "absorbed": self.absorbed,
            "within_envelope": self.within_envelope,
            "max_distance": float(np.max(self.distance)),
            "max_lhs": float(np.max(self.lhs)),
            "max_remainder": float(np.max(np.abs(self.remainder))),
        }


def _six_terms(model, a, b, da, db, h):
    """Cumulative integrals of the six nonlinear series of the difference identity."""
    lc = model.coupling(a.shape[1])[None, :-1]
    a0, a1 = a[:, :-1], a[:, 1:]
    b0 = b[:, :-1]
    x0, x1 = da[:, :-1], da[:, 1:]
    y0, y1 = db[:, :-1], db[:, 1:]
    rates = {
        "I1": -lc * a0 * x0 * x1,
        "I2": -lc * b0 * y0 * x1,
        "I3": lc * x0**2 * a1,
        "I4": lc * y0**2 * a1,
        "I5": -lc * a0 * y0 * y1,
        "I6": lc * b0 * x0 * y1,
    }
    return {k: simpson_samples(np.sum(v, axis=1), h) for k, v in rates.items()}


def weak_strong_distance(traj1: Trajectory, traj2: Trajectory, J: int | None = None) -> WeakStrongResult:
    """Distance between a strong solution ``traj1`` = (a, b) and ``traj2`` = (u, v).

    The identity
        sum (da**2 + db**2)(t) + 2 sum damping * int (da**2 + db**2)
            = sum (da**2 + db**2)(0) + 2 int sum (da * dN_a + db * dN_b + da * df)
    (d = difference, N the nonlinear terms) is evaluated with Simpson in time;
    its discrete defect is the remainder. C0 is measured on ``traj1``; J
    defaults to the smallest index at which C0(J) times the absorption factor
    is at most 2. The Gronwall envelope is max_{s<=t}|remainder| exp(C1 t)
    with C1 = 32 lam_J**c sup_{j<=J+1}(|a_j|_C + |b_j|_C).
    """
    if traj1.a.shape != traj2.a.shape or traj1.b.shape != traj2.b.shape:
        raise ValueError("trajectories must have the same number of samples and shells")
    tscale = max(1.0, float(np.max(np.abs(traj1.times))))
    if np.max(np.abs(traj1.times - traj2.times)) > 1e-12 * tscale:
        raise ValueError("trajectories are not sampled on the same time grid")
    if traj1.model != traj2.model:
        raise ValueError("trajectories belong to different models")
    model = traj1.model
    t = traj1.times
    h = float(t[1] - t[0]) if t.size > 1 else 0.0
    if t.size > 2 and np.max(np.abs(np.diff(t) - h)) > 1e-9 * h:
        raise ValueError("the time grid must be uniform")
    n = traj1.a.shape[1]
    da = traj1.a - traj2.a
    db = traj1.b - traj2.b
    ra, rb = model.damping(n)
    dist = np.sum(da * da + db * db, axis=1)
    diss = simpson_samples(da * da @ ra + db * db @ rb, h)
    lhs = dist + 2.0 * diss
    lc = model.coupling(n)
    na1, nb1 = nonlinear_terms(traj1.a.T, traj1.b.T, lc, model.cascade_coeffs)
    na2, nb2 = nonlinear_terms(traj2.a.T, traj2.b.T, lc, model.cascade_coeffs)
    work = np.sum(da.T * (na1 - na2) + db.T * (nb1 - nb2), axis=0)
    f1, f2 = traj1.forcing_used, traj2.forcing_used
    if f1 is not f2 and not (f1.is_zero and f2.is_zero):
        df = f1.evaluate(t, n) - f2.evaluate(t, n)
        work = work + np.sum(da.T * df, axis=0)
    rhs = dist[0] + 2.0 * simpson_samples(work, h)
    rem = lhs - rhs
    C0s = empirical_C0(traj1)
    _, _, factor = _envelope_profile(model, n)
    if J is None:
        J = int(np.flatnonzero(C0s * factor <= 2.0)[0])
    C0 = float(C0s[min(J, n)])
    sup = np.max(np.abs(traj1.a), axis=0) + np.max(np.abs(traj1.b), axis=0)
    C1 = 32.0 * model.lam ** (model.coupling_exponent * J) * float(np.max(sup[: min(J + 2, n)]))
    with np.errstate(over="ignore", invalid="ignore"):
        grow = np.exp(C1 * (t - t[0]))
        env = np.maximum.accumulate(np.abs(rem)) * grow
    env = np.where(np.isnan(env), np.inf, env)
    terms = None
    if model.cascade_coeffs == (1.0, -1.0, 1.0) and model.coupling_exponent == model.theta:
        terms = _six_terms(model, traj1.a, traj1.b, da, db, h)
    return WeakStrongResult(t, dist, lhs, rhs, rem, env, C0, J, C1, C0 * factor <= 2.0, terms)


# ----------------------------------------------------------------------------
# demonstrations


@dataclass
class NonuniquenessResult:
    solution: ConstructedSolution
    galerkin: Trajectory
    separation: float
    report: VerificationReport
    galerkin_budget: float  # relative
    galerkin_max_b: float
    distance: WeakStrongResult | None = None

    @property
    def passed(self) -> dict:
        p = dict(self.report.passed)
        p["separation"] = self.separation > THRESHOLDS["separation"]
        p["galerkin_budget"] = self.galerkin_budget <= THRESHOLDS["budget"]
        p["galerkin_b_zero"] = self.galerkin_max_b == 0.0
        return p

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d["pass"] = self.passed
        d["galerkin"] = {
            "N": self.galerkin.n_shells,
            "dt": self.galerkin.dt,
            "budget_relative": self.galerkin_budget,
            "max_abs_b": self.galerkin_max_b,
            "backend": self.galerkin.backend,
        }
        if self.distance is not None:
            d["weak_strong"] = self.distance.to_dict()
        return d


def nonuniqueness_demo(
    model: ModelSpec | None = None,
    solution: ConstructedSolution | None = None,
    N: int = 6,
    dt: float = 5e-7,
    j_max: int = 12,
    identity_jmax: int = 20,
    distance_stride: int = 100,
    workers: int = 1,
) -> NonuniquenessResult:
    """Two solutions for one forcing: the constructed (a, b) with b != 0 and a
    Galerkin run from zero data (b stays 0 because its equation is linear and
    homogeneous in b).

    The Galerkin step must resolve the stiffness lam_N**2 * |a_N|, which is why
    the truncation is kept small.
    """
    if solution is None:
        solution = construct(model or ModelSpec.forward(2.0, 2.5), j_max=j_max)
    sol = solution
    forcing = synthesize_forcing(sol)
    report = verify_construction(sol, j_max, identity_jmax, workers=workers)
    zero = ShellState.zeros(N)
    traj = integrate(sol.model, zero, forcing, IntegratorConfig(dt, sol.T))
    bud = energy_budget(traj)
    maxb = float(np.max(np.abs(traj.b)))
    sub = subsample(traj, distance_stride)
    strong = solution_trajectory(sol, sub.times, N)
    strong.forcing_used = sub.forcing_used = forcing
    dist = weak_strong_distance(strong, sub) if sol.model.theta is not None else None
    return NonuniquenessResult(sol, traj, report.separation, report, bud.max_relative, maxb, dist)


def standard_data(N: int, lam: float = 2.0) -> ShellState:
    """Smooth data a_j = lam**(-2j)/2, b_j = (-1)**j lam**(-2j)/4."""
    j = np.arange(N + 1)
    a = 0.5 * lam ** (-2.0 * j)
    b = 0.25 * (-1.0) ** j * lam ** (-2.0 * j)
    return ShellState(a, b, 0.0)


def standard_forcing(shells: int, t_end: float, amplitude: float = 1.0) -> ForcingSpec:
    """Constant force on shell 0."""
    v = np.zeros((2, shells))
    v[:, 0] = amplitude
    return ForcingSpec.tabulated([0.0, t_end], v)


@dataclass
class UniquenessResult:
    runs: dict  # (N, dt) -> Trajectory
    divergence: float
    pair_divergence: dict
    C0: dict  # (N, dt) -> list C0(J)
    distance: WeakStrongResult | None

    @property
    def passed(self) -> dict:
        p = {"divergence": self.divergence <= THRESHOLDS["divergence"]}
        if self.distance is not None:
            p["gronwall_envelope"] = self.distance.within_envelope
        return p

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "divergence": self.divergence,
            "pairs": [{"N1": a[0], "dt1": a[1], "N2": b[0], "dt2": b[1], "divergence": v} for (a, b), v in self.pair_divergence.items()],
            "C0": [{"N": k[0], "dt": k[1], "C0_by_J": v} for k, v in self.C0.items()],
            "weak_strong": None if self.distance is None else self.distance.to_dict(),
            "pass": self.passed,
            "thresholds": {"divergence": THRESHOLDS["divergence"], "gronwall_roundoff": THRESHOLDS["gronwall_roundoff"]},
        }


def uniqueness_demo(
    model: ModelSpec | None = None,
    data=None,
    forcing: ForcingSpec | None = None,
    dts=(1e-3, 5e-4),
    Ns=(12, 16),
    t_end: float = 1.0,
) -> UniquenessResult:
    """Integrate every (N, dt) combination and compare on common shells and sample times.

    ``data`` is a state (padded or cut to each N) or a rule N -> ShellState;
    the default is :func:`standard_data`. Samples are taken every max(dts).
    """
    model = model or ModelSpec.forward(2.0, 2.0)
    if model.theta is None or model.theta > 2.0:
        raise ValueError("the uniqueness regime needs theta <= 2")
    Ns = sorted(int(n) for n in Ns)
    dts = sorted(float(d) for d in dts)
    forcing = forcing or standard_forcing(max(Ns) + 1, t_end)
    if data is None:
        rule = lambda n: standard_data(n, model.lam)
    elif callable(data):
        rule = data
    else:
        def rule(n):
            a = np.zeros(n + 1)
            b = np.zeros(n + 1)
            k = min(n + 1, data.a.size)
            a[:k], b[:k] = data.a[:k], data.b[:k]
            return ShellState(a, b, data.time)
    stride = dts[-1]
    runs = {}
    for N, dt in itertools.product(Ns, dts):
        every = max(1, int(round(stride / dt)))
        runs[(N, dt)] = integrate(model, rule(N), forcing, IntegratorConfig(dt, t_end, sample_every=every))
    pair = {}
    for (k1, t1), (k2, t2) in itertools.combinations(runs.items(), 2):
        n = min(k1[0], k2[0]) + 1
        if t1.times.shape != t2.times.shape:
            raise ValueError("runs are not sampled on a common grid")
        pair[(k1, k2)] = float(max(np.max(np.abs(t1.a[:, :n] - t2.a[:, :n])), np.max(np.abs(t1.b[:, :n] - t2.b[:, :n]))))
    C0 = {k: empirical_C0(tr).tolist() for k, tr in runs.items()}
    big = Ns[-1]
    dist = None
    if len(dts) > 1:
        dist = weak_strong_distance(runs[(big, dts[0])], runs[(big, dts[-1])])
    return UniquenessResult(runs, max(pair.values(), default=0.0), pair, C0, dist)


__all__ = [
    "THRESHOLDS",
    "VerificationReport",
    "b_residuals",
    "continuity_gaps",
    "decay_slopes",
    "forcing_partial_sums",
    "check_energy_identity",
    "separation",
    "verify_construction",
    "solution_trajectory",
    "weak_strong_distance",
    "empirical_C0",
    "nonuniqueness_demo",
    "uniqueness_demo",
    "standard_data",
    "standard_forcing",
]
