"""Exponential bump profiles p = P phi and q = Q phi on (0, 1)."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class BumpFamily(str, enum.Enum):
    EXP_BUMP = "ExpBump"


_NORM = math.exp(-4.0)


def phi(s):
    """exp(-1/(s(1-s))) / exp(-4); equals 1 at s = 1/2 and 0 outside (0, 1)."""
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    w = np.where(inside, s * (1.0 - s), 0.25)
    with np.errstate(over="ignore", under="ignore"):
        val = np.exp(4.0 - 1.0 / w)
    return np.where(inside, val, 0.0)


def dphi(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    w = np.where(inside, s * (1.0 - s), 0.25)
    with np.errstate(over="ignore", under="ignore"):
        val = np.exp(4.0 - 1.0 / w) * (1.0 - 2.0 * s) / (w * w)
    return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class BumpProfile:
    P: float
    Q: float
    family: BumpFamily = BumpFamily.EXP_BUMP

    def __post_init__(self):
        object.__setattr__(self, "family", BumpFamily(self.family))
        if not (math.isfinite(self.P) and math.isfinite(self.Q)):
            raise ValueError("bump amplitudes must be finite")

    def p(self, s):
        return self.P * phi(s)

    def q(self, s):
        return self.Q * phi(s)

    def dp(self, s):
        return self.P * dphi(s)

    def dq(self, s):
        return self.Q * dphi(s)

    def with_amplitudes(self, P=None, Q=None) -> "BumpProfile":
        return BumpProfile(self.P if P is None else float(P), self.Q if Q is None else float(Q), self.family)
