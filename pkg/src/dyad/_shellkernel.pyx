# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integrating-factor RK4 loop for the truncated shell system."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, isfinite

cnp.import_array()


cdef inline void _nonlinear(const double* a, const double* b, const double* lc, int n,
                            double c1, double c2, double c3,
                            double* na, double* nb) noexcept nogil:
    cdef int j
    cdef double up_a, up_b, dn_a, dn_b, lcm, lj
    for j in range(n):
        lj = lc[j]
        if j + 1 < n:
            up_a = a[j + 1]
            up_b = b[j + 1]
        else:
            up_a = 0.0
            up_b = 0.0
        if j > 0:
            dn_a = a[j - 1]
            dn_b = b[j - 1]
            lcm = lc[j - 1]
        else:
            dn_a = 0.0
            dn_b = 0.0
            lcm = 0.0
        na[j] = -c1 * (lj * a[j] * up_a - lcm * dn_a * dn_a) - c3 * (lj * b[j] * up_b - lcm * dn_b * dn_b)
        nb[j] = -c2 * (lj * a[j] * up_b - lcm * dn_a * dn_b) - c3 * (lj * b[j] * up_a - lcm * dn_a * dn_b)


def run_ifrk4(const double[::1] a0, const double[::1] b0, const double[::1] lamc, const double[::1] rate_a,
              const double[::1] rate_b, double c1, double c2, double c3, const double[:, ::1] forcing, double dt, long nsteps, long sample_every):
    """Advance ``nsteps`` Lawson RK4 steps.

    ``forcing`` holds f at half-step resolution (2 nsteps + 1 rows) or has zero
    rows for an unforced run. Returns (a, b, A, B, status, bad_step, bad_shell)
    with samples A, B taken after every ``sample_every`` steps.
    """
    cdef int n = a0.shape[0]
    cdef long ns = nsteps // sample_every
    cdef bint forced = forcing.shape[0] > 0
    A_out = np.zeros((ns, n))
    B_out = np.zeros((ns, n))
    cdef double[:, ::1] A = A_out
    cdef double[:, ::1] B = B_out
    a_arr = np.array(a0, copy=True)
    b_arr = np.array(b0, copy=True)
    cdef double[::1] a = a_arr
    cdef double[::1] b = b_arr
    work = np.zeros((16, n))
    cdef double[:, ::1] w = work
    # rows: 0 Ea 1 Eb 2 Eha 3 Ehb 4-5 k1 6-7 k2 8-9 k3 10-11 k4 12-13 u 14 scratch
    cdef int j
    cdef long step, srow = 0
    cdef int status = 0
    cdef long bad_step = -1
    cdef int bad_shell = -1
    cdef double h2 = 0.5 * dt
    for j in range(n):
        w[0, j] = exp(-rate_a[j] * dt)
        w[1, j] = exp(-rate_b[j] * dt)
        w[2, j] = exp(-rate_a[j] * h2)
        w[3, j] = exp(-rate_b[j] * h2)
    with nogil:
        for step in range(nsteps):
            _nonlinear(&a[0], &b[0], &lamc[0], n, c1, c2, c3, &w[4, 0], &w[5, 0])
            if forced:
                for j in range(n):
                    w[4, j] += forcing[2 * step, j]
            for j in range(n):
                w[12, j] = w[2, j] * (a[j] + h2 * w[4, j])
                w[13, j] = w[3, j] * (b[j] + h2 * w[5, j])
            _nonlinear(&w[12, 0], &w[13, 0], &lamc[0], n, c1, c2, c3, &w[6, 0], &w[7, 0])
            if forced:
                for j in range(n):
                    w[6, j] += forcing[2 * step + 1, j]
            for j in range(n):
                w[12, j] = w[2, j] * a[j] + h2 * w[6, j]
                w[13, j] = w[3, j] * b[j] + h2 * w[7, j]
            _nonlinear(&w[12, 0], &w[13, 0], &lamc[0], n, c1, c2, c3, &w[8, 0], &w[9, 0])
            if forced:
                for j in range(n):
                    w[8, j] += forcing[2 * step + 1, j]
            for j in range(n):
                w[12, j] = w[0, j] * a[j] + dt * w[2, j] * w[8, j]
                w[13, j] = w[1, j] * b[j] + dt * w[3, j] * w[9, j]
            _nonlinear(&w[12, 0], &w[13, 0], &lamc[0], n, c1, c2, c3, &w[10, 0], &w[11, 0])
            if forced:
                for j in range(n):
                    w[10, j] += forcing[2 * step + 2, j]
            for j in range(n):
                a[j] = w[0, j] * a[j] + dt / 6.0 * (w[0, j] * w[4, j] + 2.0 * w[2, j] * (w[6, j] + w[8, j]) + w[10, j])
                b[j] = w[1, j] * b[j] + dt / 6.0 * (w[1, j] * w[5, j] + 2.0 * w[3, j] * (w[7, j] + w[9, j]) + w[11, j])
            for j in range(n):
                if not (isfinite(a[j]) and isfinite(b[j])):
                    status = 1
                    bad_step = step
                    bad_shell = j
                    break
            if status:
                break
            if (step + 1) % sample_every == 0:
                for j in range(n):
                    A[srow, j] = a[j]
                    B[srow, j] = b[j]
                srow += 1
    return a_arr, b_arr, A_out, B_out, status, bad_step, bad_shell
