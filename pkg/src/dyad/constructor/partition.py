"""Geometric time partitions and the branch bookkeeping built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Partition:
    """Knots t_j = lam**(-s j) T with T = 1/(lam**s - 1), so t_{j-1} - t_j = lam**(-s j)."""

    lam: float
    s_exp: float
    j_max: int

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError(f"lambda must be > 1, got {self.lam}")
        if not self.s_exp > 0:
            raise ValueError(f"s_exp must be > 0, got {self.s_exp}")
        if int(self.j_max) != self.j_max or self.j_max < 2:
            raise ValueError(f"j_max must be an integer >= 2, got {self.j_max}")
        object.__setattr__(self, "j_max", int(self.j_max))

    @property
    def T(self) -> float:
        return 1.0 / (self.lam**self.s_exp - 1.0)

    @property
    def ratio(self) -> float:
        """lam**s, the factor between consecutive knots."""
        return self.lam**self.s_exp

    def knot(self, j):
        """t_j for integer j (negative j allowed, giving times beyond T)."""
        return self.lam ** (-self.s_exp * np.asarray(j, dtype=float)) * self.T

    @property
    def knots(self) -> np.ndarray:
        return self.knot(np.arange(self.j_max + 1))

    def width(self, j):
        """t_{j-1} - t_j = lam**(-s j)."""
        return self.lam ** (-self.s_exp * np.asarray(j, dtype=float))

    def scaled_time(self, k, t):
        """sigma_k(t) = lam**(s k) (t - t_k) = lam**(s k) t - T."""
        return self.ratio ** np.asarray(k, dtype=float) * np.asarray(t, dtype=float) - self.T

    def branch_index(self, t):
        """k with t in [t_k, t_{k-1}); t = 0 maps to a sentinel far below every shell.

        Half-open intervals: a time exactly on a knot t_k belongs to [t_k, t_{k-1}),
        the branch on its right.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValueError("times must be finite and >= 0")
        big = np.iinfo(np.int64).max // 4
        pos = t > 0
        tt = np.where(pos, t, self.T)
        k = np.ceil(np.log(self.T / tt) / (self.s_exp * math.log(self.lam))).astype(np.int64)
        # repair rounding so that 0 <= sigma < 1
        for _ in range(2):
            sig = self.scaled_time(k, tt)
            k = np.where(sig < 0, k + 1, k)
            sig = self.scaled_time(k, tt)
            k = np.where(sig >= 1, k - 1, k)
        return np.where(pos, k, big)


def make_partition(lam: float, s_exp: float, j_max: int) -> Partition:
    return Partition(float(lam), float(s_exp), j_max)
