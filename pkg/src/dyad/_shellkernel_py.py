"""Pure numpy version of the compiled integrating-factor RK4 loop.

Same call signature and return values as the extension in _shellkernel.pyx.
"""
from __future__ import annotations

import numpy as np

from .core import nonlinear_terms


def run_ifrk4(a0, b0, lamc, rate_a, rate_b, c1, c2, c3, forcing, dt, nsteps, sample_every):
    a = np.array(a0, dtype=float)
    b = np.array(b0, dtype=float)
    lamc = np.asarray(lamc, dtype=float)
    n = a.size
    coeffs = (c1, c2, c3)
    forced = forcing.shape[0] > 0
    Ea, Eb = np.exp(-rate_a * dt), np.exp(-rate_b * dt)
    Eha, Ehb = np.exp(-rate_a * 0.5 * dt), np.exp(-rate_b * 0.5 * dt)
    ns = nsteps // sample_every
    A = np.zeros((ns, n))
    B = np.zeros((ns, n))
    h2 = 0.5 * dt
    srow = 0
    zero = np.zeros(n)
    for step in range(nsteps):
        f0 = forcing[2 * step] if forced else zero
        fh = forcing[2 * step + 1] if forced else zero
        f1 = forcing[2 * step + 2] if forced else zero
        k1a, k1b = nonlinear_terms(a, b, lamc, coeffs)
        k1a = k1a + f0
        k2a, k2b = nonlinear_terms(Eha * (a + h2 * k1a), Ehb * (b + h2 * k1b), lamc, coeffs)
        k2a = k2a + fh
        k3a, k3b = nonlinear_terms(Eha * a + h2 * k2a, Ehb * b + h2 * k2b, lamc, coeffs)
        k3a = k3a + fh
        k4a, k4b = nonlinear_terms(Ea * a + dt * Eha * k3a, Eb * b + dt * Ehb * k3b, lamc, coeffs)
        k4a = k4a + f1
        a = Ea * a + dt / 6.0 * (Ea * k1a + 2.0 * Eha * (k2a + k3a) + k4a)
        b = Eb * b + dt / 6.0 * (Eb * k1b + 2.0 * Ehb * (k2b + k3b) + k4b)
        bad = ~(np.isfinite(a) & np.isfinite(b))
        if bad.any():
            return a, b, A, B, 1, step, int(np.argmax(bad))
        if (step + 1) % sample_every == 0:
            A[srow] = a
            B[srow] = b
            srow += 1
    return a, b, A, B, 0, -1, -1
