"""Time integration of the truncated shell system, discrete energy budgets,
the a-priori contraction bounds and truncation-convergence studies."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .constructor.forcing import ForcingSpec
from .core import ModelError, ModelSpec, ShellState
from .quadrature import simpson_samples

CHUNK_STEPS = 65536


class Method(str, enum.Enum):
    IFRK4 = "IFRK4"


class BlowUpError(FloatingPointError):
    """A non-finite amplitude appeared; records where."""

    def __init__(self, time: float, shell: int, component: str = "a/b"):
        super().__init__(f"non-finite amplitude at t={time:.17g} in shell {shell}")
        self.time = time
        self.shell = shell
        self.component = component


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    method: Method = Method.IFRK4
    richardson_check: bool = False
    sample_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError("sample_every must be a positive integer")


@dataclass
class Trajectory:
    """Samples of one run: ``a[i]``, ``b[i]`` at ``times[i]``."""

    model: ModelSpec
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    forcing_used: ForcingSpec
    dt: float
    richardson_diff: float | None = None
    backend: str = ""

    @property
    def n_shells(self) -> int:
        return self.a.shape[1] - 1

    @property
    def states(self) -> list:
        return [ShellState(self.a[i], self.b[i], float(self.times[i])) for i in range(self.times.size)]

    def state(self, i: int) -> ShellState:
        return ShellState(self.a[i], self.b[i], float(self.times[i]))

    @property
    def energy(self) -> np.ndarray:
        return 0.5 * (np.sum(self.a**2, axis=1) + np.sum(self.b**2, axis=1))

    @property
    def cross_helicity(self) -> np.ndarray:
        return np.sum(self.a * self.b, axis=1)


def _run(model: ModelSpec, a0, b0, t0, forcing: ForcingSpec, dt, nsteps, sample_every, kernel=None):
    kernel = kernel or kernels.run_ifrk4
    n = a0.size
    lamc = np.ascontiguousarray(model.coupling(n))
    ra, rb = model.damping(n)
    c1, c2, c3 = model.cascade_coeffs
    a = np.ascontiguousarray(a0, dtype=float)
    b = np.ascontiguousarray(b0, dtype=float)
    chunk = max(sample_every, (CHUNK_STEPS // sample_every) * sample_every)
    As, Bs = [a[None, :].copy()], [b[None, :].copy()]
    done = 0
    empty = np.zeros((0, n))
    while done < nsteps:
        m = min(chunk, nsteps - done)
        if forcing.is_zero:
            F = empty
        else:
            tt = t0 + (done + 0.5 * np.arange(2 * m + 1)) * dt
            F = np.ascontiguousarray(forcing.evaluate(tt, n).T)
        a, b, A, B, status, bad_step, bad_shell = kernel(
            a, b, lamc, np.ascontiguousarray(ra), np.ascontiguousarray(rb), c1, c2, c3, F, dt, m, sample_every
        )
        if status:
            raise BlowUpError(t0 + (done + bad_step + 1) * dt, int(bad_shell))
        As.append(A)
        Bs.append(B)
        done += m
    return np.concatenate(As), np.concatenate(Bs)


def integrate(model: ModelSpec, initial: ShellState, forcing: ForcingSpec, cfg: IntegratorConfig, kernel=None) -> Trajectory:
    """Integrate from ``initial.time`` to ``cfg.t_end`` with the Lawson IFRK4 scheme.

    The step is dt when (t_end - t0) is a multiple of dt, otherwise the
    nearest smaller step that divides the interval.
    """
    if model.is_nse and np.any(initial.b != 0):
        raise ModelError(f"{model.variant.value} carries no magnetic field; b must be identically zero")
    t0 = initial.time
    span = cfg.t_end - t0
    if span <= 0:
        raise ValueError("t_end must lie after the initial time")
    nsteps = max(1, int(math.ceil(span / cfg.dt - 1e-9)))
    nsteps = int(math.ceil(nsteps / cfg.sample_every)) * cfg.sample_every
    dt = span / nsteps
    n = initial.a.size
    forcing.check_domain(t0, cfg.t_end, n)
    A, B = _run(model, initial.a, initial.b, t0, forcing, dt, nsteps, cfg.sample_every, kernel)
    times = t0 + dt * cfg.sample_every * np.arange(A.shape[0])
    times[-1] = cfg.t_end
    rdiff = None
    if cfg.richardson_check:
        A2, B2 = _run(model, initial.a, initial.b, t0, forcing, 0.5 * dt, 2 * nsteps, 2 * cfg.sample_every, kernel)
        rdiff = float(max(np.max(np.abs(A2 - A)), np.max(np.abs(B2 - B))))
    backend = "custom" if kernel is not None else kernels.BACKEND
    return Trajectory(model, times, A, B, forcing, dt, rdiff, backend)


@dataclass
class BudgetReport:
    """delta(t) = E(t) + D(t) - E(0) - W(t) with D the dissipation and W the work integral."""

    times: np.ndarray
    defect: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray
    work: np.ndarray

    @property
    def scale(self) -> float:
        return float(max(np.max(np.abs(self.energy)), np.max(np.abs(self.dissipation)), np.max(np.abs(self.work)), 1e-300))

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.defect)))

    @property
    def max_relative(self) -> float:
        return self.max_abs / self.scale


def energy_budget(traj: Trajectory, forcing: ForcingSpec | None = None) -> BudgetReport:
    """Discrete energy balance along a trajectory.

    Both time integrals use composite Simpson on the trajectory samples (with
    a matching three-point step for odd sample indices), so the defect
    shrinks at fourth order under dt refinement.
    """
    forcing = traj.forcing_used if forcing is None else forcing
    model = traj.model
    n = traj.a.shape[1]
    ra, rb = model.damping(n)
    E = traj.energy
    diss_rate = traj.a**2 @ ra + traj.b**2 @ rb
    if forcing.is_zero:
        work_rate = np.zeros_like(E)
    else:
        work_rate = np.sum(forcing.evaluate(traj.times, n).T * traj.a, axis=1)
    h = float(traj.times[1] - traj.times[0]) if traj.times.size > 1 else 0.0
    D = simpson_samples(diss_rate, h)
    W = simpson_samples(work_rate, h)
    delta = E + D - E[0] - W
    return BudgetReport(traj.times, delta, E, D, W)


@dataclass(frozen=True)
class ContractionBounds:
    R_N: float
    t_N1: float
    C_N: float


def contraction_constant(model: ModelSpec, n_index: int) -> float:
    """C_N: largest dissipation multiplier plus twice the largest nonlinear coefficient at shell N."""
    pa, pb = model.dissipation_exponents
    lam_n = model.lam**n_index
    diss = model.nu * lam_n**pa
    if not model.is_nse:
        diss = max(diss, model.mu * lam_n**pb)
    return diss + 2.0 * max(abs(c) for c in model.cascade_coeffs) * lam_n**model.coupling_exponent


def contraction_bounds(model: ModelSpec, initial: ShellState, forcing: ForcingSpec, horizon: float) -> ContractionBounds:
    n = initial.a.size
    R = 2.0 * float(np.linalg.norm(initial.a)) + 2.0 * float(np.linalg.norm(initial.b)) + 2.0 * forcing.l1_norm(horizon, n)
    C = contraction_constant(model, initial.n_shells)
    t1 = 1.0 / (2.0 * C * (2.0 * R + 1.0)) if C > 0 else math.inf
    return ContractionBounds(R, t1, C)


@dataclass
class ConvergenceTable:
    Ns: list
    differences: list  # sup |state_N - state_N'| over time and shells j <= N
    max_b: list = field(default_factory=list)

    @property
    def rows(self):
        return [(self.Ns[i], self.Ns[i + 1], self.differences[i]) for i in range(len(self.differences))]


def _extend(initial, N: int) -> ShellState:
    if callable(initial):
        return initial(N)
    a = np.zeros(N + 1)
    b = np.zeros(N + 1)
    k = min(N + 1, initial.a.size)
    a[:k] = initial.a[:k]
    b[:k] = initial.b[:k]
    return ShellState(a, b, initial.time)


def convergence_study(
    model: ModelSpec,
    initial: ShellState | Callable[[int], ShellState],
    forcing: ForcingSpec,
    Ns: Sequence[int],
    cfg: IntegratorConfig,
) -> ConvergenceTable:
    """Integrate each truncation and compare consecutive ones on their common shells.

    ``initial`` is either a state (truncated or zero-padded to each N) or a
    rule N -> ShellState.
    """
    Ns = list(Ns)
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("truncations must be strictly increasing")
    trajs = [integrate(model, _extend(initial, N), forcing, cfg) for N in Ns]
    diffs = []
    for t1, t2, N in zip(trajs, trajs[1:], Ns):
        d = max(np.max(np.abs(t1.a - t2.a[:, : N + 1])), np.max(np.abs(t1.b - t2.b[:, : N + 1])))
        diffs.append(float(d))
    return ConvergenceTable(Ns, diffs, [float(np.max(np.abs(t.b))) for t in trajs])
