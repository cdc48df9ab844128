"""Forcing descriptions consumed by the integrator and the verifier."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from ..quadrature import gauss_legendre_nodes


class ForcingKind(str, enum.Enum):
    ZERO = "Zero"
    TABULATED = "Tabulated"
    SYNTHESIZED = "Synthesized"
    ANALYTIC = "Analytic"


class ForcingUndefined(ValueError):
    """Forcing requested outside its domain or for too many shells."""


@dataclass(frozen=True)
class ForcingSpec:
    """f_j(t) for shells 0..N.

    Zero: f = 0 everywhere. Tabulated: samples ``values[i, j]`` at ``times[i]``
    with linear interpolation in t. Synthesized: evaluated from a constructed
    solution. Analytic: a vectorized callable ``func(t, size) -> (size, len(t))``
    (not serializable; used for closed-form test problems).
    """

    kind: ForcingKind
    times: Any = None
    values: Any = None
    solution: Any = None
    func: Callable | None = None
    label: str = ""

    @classmethod
    def zero(cls) -> "ForcingSpec":
        return cls(ForcingKind.ZERO)

    @classmethod
    def tabulated(cls, times, values) -> "ForcingSpec":
        times = np.array(times, dtype=float)
        values = np.array(values, dtype=float)
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("tabulated times must be strictly increasing with at least two entries")
        if values.ndim != 2 or values.shape[0] != times.size:
            raise ValueError("tabulated values must have shape (len(times), shells)")
        if not np.all(np.isfinite(values)):
            raise ValueError("tabulated values must be finite")
        times.setflags(write=False)
        values.setflags(write=False)
        return cls(ForcingKind.TABULATED, times=times, values=values)

    @classmethod
    def synthesized(cls, solution) -> "ForcingSpec":
        return cls(ForcingKind.SYNTHESIZED, solution=solution)

    @classmethod
    def analytic(cls, func, label="") -> "ForcingSpec":
        return cls(ForcingKind.ANALYTIC, func=func, label=label)

    @property
    def horizon(self) -> float:
        if self.kind is ForcingKind.TABULATED:
            return float(self.times[-1])
        if self.kind is ForcingKind.SYNTHESIZED:
            return float(self.solution.T)
        return math.inf

    @property
    def start(self) -> float:
        if self.kind is ForcingKind.TABULATED:
            return float(self.times[0])
        return 0.0

    @property
    def is_zero(self) -> bool:
        return self.kind is ForcingKind.ZERO

    def max_shells(self) -> float:
        if self.kind is ForcingKind.TABULATED:
            return self.values.shape[1]
        if self.kind is ForcingKind.SYNTHESIZED:
            return self.solution.j_max + 1
        return math.inf

    def check_domain(self, t0: float, t1: float, size: int):
        if size > self.max_shells():
            raise ForcingUndefined(f"forcing provides {self.max_shells()} shells, {size} requested")
        tol = 1e-12 * max(1.0, abs(t1))
        if t0 < self.start - tol or t1 > self.horizon + tol:
            raise ForcingUndefined(f"forcing is defined on [{self.start:.17g}, {self.horizon:.17g}], needed [{t0:.17g}, {t1:.17g}]")

    def evaluate(self, t, size: int) -> np.ndarray:
        """Array (size, len(t)) of f_j(t)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind is ForcingKind.ZERO:
            return np.zeros((size, t.size))
        if t.size:
            self.check_domain(float(t.min()), float(t.max()), size)
        if self.kind is ForcingKind.TABULATED:
            tc = np.clip(t, self.times[0], self.times[-1])
            return np.stack([np.interp(tc, self.times, self.values[:, j]) for j in range(size)])
        if self.kind is ForcingKind.SYNTHESIZED:
            return self.solution.forcing_values(np.minimum(t, self.solution.T), size - 1)
        out = np.asarray(self.func(t, size), dtype=float)
        if out.shape != (size, t.size):
            raise ForcingUndefined(f"analytic forcing returned shape {out.shape}, expected {(size, t.size)}")
        return out

    def breakpoints(self, t0: float, t1: float, size: int):
        """Points in [t0, t1] where the forcing may lose smoothness."""
        pts = [t0, t1]
        if self.kind is ForcingKind.TABULATED:
            pts.extend(self.times[(self.times > t0) & (self.times < t1)])
        elif self.kind is ForcingKind.SYNTHESIZED:
            bp = self.solution.breakpoints(size, min(t1, self.solution.T))
            pts.extend(bp[(bp > t0) & (bp < t1)])
        return np.unique(np.asarray(pts, dtype=float))

    def l1_norm(self, t_end: float, size: int, order: int = 16, per_piece: int = 8) -> float:
        """int_0^t_end ||f(t)||_l2 dt by composite Gauss-Legendre between breakpoints."""
        if self.kind is ForcingKind.ZERO or t_end <= 0:
            return 0.0
        x, w = gauss_legendre_nodes(self.breakpoints(0.0, t_end, size), order, per_piece)
        f = self.evaluate(x, size)
        return float(np.sum(w * np.sqrt(np.sum(f * f, axis=0))))

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.value}
        if self.kind is ForcingKind.TABULATED:
            d["times"] = self.times.tolist()
            d["values"] = self.values.tolist()
        elif self.kind is ForcingKind.SYNTHESIZED:
            d["solution"] = self.solution.to_manifest()
        elif self.kind is ForcingKind.ANALYTIC:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ForcingSpec":
        kind = ForcingKind(d["kind"])
        if kind is ForcingKind.ZERO:
            return cls.zero()
        if kind is ForcingKind.TABULATED:
            return cls.tabulated(d["times"], d["values"])
        if kind is ForcingKind.SYNTHESIZED:
            from .solution import ConstructedSolution

            return cls.synthesized(ConstructedSolution.from_manifest(d["solution"]))
        raise ValueError("analytic forcing cannot be restored from a manifest")


def synthesize_forcing(solution) -> ForcingSpec:
    return ForcingSpec.synthesized(solution)
