import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from dyad.constructor.bump import BumpProfile, dphi, phi
from dyad.constructor.forcing import ForcingKind, ForcingSpec, ForcingUndefined, synthesize_forcing
from dyad.constructor.hsystem import (
    DegenerateKernel,
    HVariant,
    InvalidRho,
    SearchExhausted,
    calibrate_triangular,
    solve_h_triangular,
    triangular_exponents,
)
from dyad.constructor.monodromy import (
    SearchConfig,
    calibrate_monodromy_gnse,
    monodromy_matrix,
    real_leading_eigen,
)
from dyad.constructor.partition import make_partition
from dyad.constructor.solution import ConstructedSolution, construct
from dyad.core import ModelSpec

LAM, THETA = 2.0, 2.5
RHO = 2.0**3.5


# partition and bump


def test_partition_examples():
    p = make_partition(2.0, 2.0, 4)
    assert p.T == pytest.approx(1 / 3)
    assert p.knot(1) == pytest.approx(1 / 12)
    assert p.knot(0) - p.knot(1) == pytest.approx(0.25)
    q = make_partition(2.0, 0.8, 2)
    assert q.T == pytest.approx(1 / (2**0.8 - 1))
    k = q.knots
    assert np.all(np.diff(k) < 0) and k.size == 3
    for j in range(1, 6):
        assert p.knot(j - 1) - p.knot(j) == pytest.approx(p.width(j))
    with pytest.raises(ValueError):
        make_partition(2.0, 2.0, 1)


def test_branch_index_half_open():
    p = make_partition(2.0, 2.0, 12)
    for k in range(1, 10):
        assert p.branch_index(p.knot(k)) == k
        assert p.branch_index(p.knot(k) * (1 + 1e-9)) == k
        assert p.branch_index(p.knot(k) * (1 - 1e-9)) == k + 1
    t = np.linspace(1e-6, p.T, 1000)
    k = p.branch_index(t)
    s = p.scaled_time(k, t)
    assert np.all((s >= 0) & (s < 1))
    assert p.branch_index(0.0) > 10**15


def test_bump():
    assert phi(0.5) == pytest.approx(1.0)
    assert phi(0.0) == 0.0 and phi(1.0) == 0.0 and phi(-1) == 0.0
    s = np.linspace(0.05, 0.95, 11)
    fd = (phi(s + 1e-6) - phi(s - 1e-6)) / 2e-6
    assert np.allclose(dphi(s), fd, rtol=1e-6, atol=1e-9)
    b = BumpProfile(2.0, 3.0)
    assert b.q(0.5) == pytest.approx(3.0)
    assert b.with_amplitudes(P=5.0).P == 5.0


# triangular profiles


def ivp_profiles(variant, lam, expo, P, Q, c0, d0):
    s_exp, c, eps = triangular_exponents(variant, lam, expo)

    def f(t, h):
        p, q = P * phi(t), Q * phi(t)
        return [
            -(lam**-s_exp - eps * lam**-c * q) * h[0] + eps * lam**-c * p * h[1],
            -h[1] - eps * q * h[2],
            -(lam**s_exp) * h[2],
        ]

    return solve_ivp(f, (0, 1), [0.0, c0, d0], method="DOP853", rtol=1e-13, atol=1e-14, dense_output=True)


@pytest.mark.parametrize("variant,expo", [("TriangularForward", 2.5), ("TriangularMixed", 2.5), ("TriangularFractional", 0.4)])
def test_profiles_match_ode_oracle(variant, expo):
    h = solve_h_triangular(variant, 2.0, expo, BumpProfile(1.3, 0.7), 2.0, 1.0)
    sol = ivp_profiles(variant, 2.0, expo, 1.3, 0.7, 2.0, 1.0)
    s = np.linspace(0, 1, 101)
    assert np.max(np.abs(h.evaluate(s) - sol.sol(s))) < 1e-9


def test_q_zero_closed_forms():
    h = solve_h_triangular("TriangularForward", LAM, THETA, BumpProfile(0.0, 0.0), 3.0, 2.0)
    s = np.linspace(0, 1, 33)
    H = h.evaluate(s)
    assert np.allclose(H[2], 2.0 * np.exp(-4.0 * s), rtol=0, atol=1e-15)
    assert np.allclose(H[1], 3.0 * np.exp(-s), rtol=0, atol=1e-15)
    assert np.all(H[0] == 0.0)


def test_grid_refinement_order():
    vals = [solve_h_triangular("TriangularForward", LAM, THETA, BumpProfile(1.0, 1.0), 1.0, 1.0, m=m).evaluate(np.linspace(0, 1, 9)) for m in (32, 64, 128)]
    e1 = np.max(np.abs(vals[0] - vals[1]))
    e2 = np.max(np.abs(vals[1] - vals[2]))
    assert math.log2(e1 / e2) >= 3.0


def test_calibration_q_zero():
    rho = 2.0**2.5 * 2.0
    c0, d0, P, h = calibrate_triangular("TriangularForward", LAM, THETA, BumpProfile(1.0, 0.0), rho)
    assert d0 == 1.0
    assert c0 == pytest.approx(math.e * rho, rel=1e-14)
    # independent oracle: integrate the system with the solved amplitude
    sol = ivp_profiles("TriangularForward", LAM, THETA, P, 0.0, c0, d0)
    end = sol.y[:, -1]
    assert abs(end[0] - rho * c0) <= 1e-9 * rho * c0
    assert abs(end[1] - rho * d0) <= 1e-9 * rho
    d1, d2, _ = h.boundary_defect()
    assert d1 <= 1e-10 * rho * c0


def test_calibration_values_default():
    c0, _, P, _ = calibrate_triangular("TriangularForward", LAM, THETA, BumpProfile(1.0, 0.0), RHO)
    assert c0 == pytest.approx(math.e * RHO)
    assert 300 < P < 320
    c0m, _, Pm, _ = calibrate_triangular("TriangularMixed", LAM, THETA, BumpProfile(1.0, 0.0), RHO)
    assert Pm == pytest.approx(-P, rel=1e-12)


def test_calibration_fractional():
    c0, d0, P, h = calibrate_triangular("TriangularFractional", 2.0, 0.4, BumpProfile(1.0, 0.0), 4.0)
    d1, d2, scale = h.boundary_defect()
    assert max(d1, d2) <= 1e-10 * scale
    sol = ivp_profiles("TriangularFractional", 2.0, 0.4, P, 0.0, c0, d0)
    assert sol.y[0, -1] == pytest.approx(4.0 * c0, rel=1e-9)


def test_calibration_errors():
    with pytest.raises(InvalidRho):
        calibrate_triangular("TriangularForward", LAM, THETA, BumpProfile(1.0, 0.0), 2.0**2.5)
    with pytest.raises(InvalidRho):
        calibrate_triangular("TriangularFractional", 2.0, 0.4, BumpProfile(1.0, 0.0), 2.0)
    with pytest.raises(DegenerateKernel):
        calibrate_triangular("TriangularForward", LAM, THETA, BumpProfile(0.0, 0.0), RHO, solve_amplitude=False)


# coupled system


def test_monodromy_decoupled():
    B = monodromy_matrix(2.0, 0.4, 0.0, 0.0)
    assert np.allclose(B, [[0.0, 0.0], [math.exp(-1), 0.0]], atol=1e-14)
    assert real_leading_eigen(B) == 0.0
    with pytest.raises(SearchExhausted) as ei:
        calibrate_monodromy_gnse(2.0, 0.4, 2.0, SearchConfig(half_widths=(0.0,)))
    assert ei.value.best_radius == 0.0


def test_monodromy_matches_ode_oracle():
    lam, al, P, Q = 2.0, 0.4, 3.0, -2.0

    def f(t, h):
        p, q = P * phi(t), Q * phi(t)
        A = np.array([[q / lam - lam ** (-2 * al), -p / lam, 0], [2 * p / lam, -1, q], [0, -2 * q, -(lam ** (2 * al))]])
        return A @ h

    B = monodromy_matrix(lam, al, P, Q, 1024)
    for k, e in enumerate(([0, 1, 0], [0, 0, 1])):
        end = solve_ivp(f, (0, 1), e, method="DOP853", rtol=1e-13, atol=1e-14).y[:, -1]
        assert np.allclose(B[:, k], end[:2], atol=1e-10)


def test_gnse_search(gnse_solution):
    h = gnse_solution.h
    rho = h.rho
    assert abs(rho) > 2.0
    B = monodromy_matrix(2.0, 0.4, h.bump.P, h.bump.Q, h.m)
    v = np.array([h.c0, h.d0])
    assert np.linalg.norm(B @ v - rho * v) <= 1e-9 * abs(rho) * np.linalg.norm(v)
    B2 = monodromy_matrix(2.0, 0.4, h.bump.P, h.bump.Q, 2 * h.m)
    assert abs(real_leading_eigen(B2) - rho) <= 1e-6 * abs(rho)
    with pytest.raises(ValueError):
        calibrate_monodromy_gnse(2.0, 0.6)


# assembled solutions


def test_a_support_and_amplitude(forward_solution):
    sol = forward_solution
    part = sol.partition
    for j in range(0, 13):
        for k in range(1, 15):
            lo, hi = part.knot(k), min(part.knot(k - 1), sol.T)
            t = np.linspace(lo, hi, 1000)
            a = sol.a(j, t)
            if k not in (j, j + 1):
                assert np.all(a == 0.0)
        t = np.linspace(part.knot(j + 1), part.knot(j), 1001)
        sup = np.max(np.abs(sol.a(j, t)))
        assert sup / LAM ** ((j + 1) * (2 - THETA)) == pytest.approx(abs(sol.bump.P), rel=1e-12)


def test_zero_initial_data(forward_solution):
    A, B, _, _ = forward_solution.fields(np.array([0.0]), 20, derivatives=False)
    assert np.all(A == 0.0) and np.all(B == 0.0)


def test_branch_derivatives_match_finite_differences(forward_solution):
    sol = forward_solution
    for j in (0, 3, 7):
        for k in (j + 1, j, j - 1):
            if k < 1:
                continue
            lo, hi = sol.partition.knot(k), sol.partition.knot(k - 1)
            t = np.linspace(lo, hi, 41)[5:-5]
            eps = 1e-6 * (hi - lo)
            _, b, da, db = sol.branch(j, k, t)
            ap, bp, _, _ = sol.branch(j, k, t + eps, derivatives=False)
            am, bm, _, _ = sol.branch(j, k, t - eps, derivatives=False)
            scale = max(np.max(np.abs(db)), 1e-300)
            assert np.max(np.abs((bp - bm) / (2 * eps) - db)) <= 1e-6 * scale
            if np.any(da):
                assert np.max(np.abs((ap - am) / (2 * eps) - da)) <= 1e-6 * np.max(np.abs(da))


def test_forcing_vanishes_before_shell_activates(forward_solution):
    sol = forward_solution
    for j in range(1, 12):
        t = np.linspace(0, sol.partition.knot(j + 1), 200, endpoint=False)
        f, _ = sol.shell_terms(j, t)
        assert np.all(f == 0.0)


def test_residual_with_independent_derivative(forward_solution):
    # b residual rebuilt from finite-difference time derivatives instead of the profile ODE
    sol = forward_solution
    j = 4
    lo, hi = sol.partition.knot(j + 1), sol.partition.knot(j)
    t = np.linspace(lo, hi, 50)[3:-3]
    eps = 1e-7 * (hi - lo)
    A, B, _, _ = sol.fields(t, j + 1, derivatives=False)
    _, Bp, _, _ = sol.fields(t + eps, j + 1, derivatives=False)
    _, Bm, _, _ = sol.fields(t - eps, j + 1, derivatives=False)
    dB = (Bp - Bm) / (2 * eps)
    lc = LAM ** (THETA * np.arange(j + 2))
    nlb = -(-1) * (lc[j] * A[j] * B[j + 1] - lc[j - 1] * A[j - 1] * B[j - 1]) - (lc[j] * B[j] * A[j + 1] - lc[j - 1] * A[j - 1] * B[j - 1])
    r = dB[j] + LAM ** (2 * j) * B[j] - nlb
    assert np.max(np.abs(r)) <= 1e-5 * np.max(np.abs(LAM ** (2 * j) * B[j]))


def test_solution_checks(forward_solution):
    sol = forward_solution
    with pytest.raises(ValueError):
        sol.fields(np.array([sol.T * 1.01]), 3)
    with pytest.raises(ValueError):
        ConstructedSolution(ModelSpec.mixed(LAM, THETA), sol.partition, sol.bump, sol.h, 12)
    with pytest.raises(ValueError):
        ConstructedSolution(ModelSpec.forward(LAM, THETA, mu=0.5), sol.partition, sol.bump, sol.h, 12)
    with pytest.raises(ValueError):
        construct(ModelSpec.nse(2.0, 2.5))


def test_manifest_roundtrip(forward_solution):
    sol = forward_solution
    text = json.dumps(sol.to_manifest())
    again = ConstructedSolution.from_manifest(json.loads(text))
    t = np.linspace(0, sol.T, 777)
    for x, y in zip(sol.fields(t, 12), again.fields(t, 12)):
        assert np.array_equal(x, y)


def test_gnse_pair_are_nse_solutions(gnse_solution):
    sol = gnse_solution
    t = np.linspace(sol.partition.knot(6), sol.T, 3000)[1:-1]
    n = 6
    U1, U2 = sol.nse_pair(t, n + 1)
    f = sol.forcing_values(t, n)
    lam, al = 2.0, 0.4
    h = 1e-7
    for sign, U in ((1.0, U1), (-1.0, U2)):
        A1, B1 = sol.nse_pair(t + h, n + 1)
        A0, B0 = sol.nse_pair(t - h, n + 1)
        Up = A1 if sign > 0 else B1
        Um = A0 if sign > 0 else B0
        dU = (Up - Um) / (2 * h)
        j = np.arange(n + 1)[:, None]
        lj = lam**j
        lm = np.where(j > 0, lam ** (j - 1.0), 0.0)
        Um1 = np.vstack([np.zeros((1, t.size)), U[: n]])
        res = dU[: n + 1] + lam ** (2 * al * j) * U[: n + 1] + lj * U[: n + 1] * U[1 : n + 2] - lm * Um1**2 - f
        scale = np.max(np.abs(f)) + np.max(np.abs(dU))
        assert np.max(np.abs(res)) <= 1e-5 * scale


# forcing


def test_forcing_specs(forward_solution):
    z = ForcingSpec.zero()
    assert np.all(z.evaluate([0.1, 0.2], 3) == 0)
    tab = ForcingSpec.tabulated([0.0, 1.0], [[0.0, 2.0], [1.0, 4.0]])
    assert tab.evaluate([0.5], 2)[:, 0] == pytest.approx([0.5, 3.0])
    with pytest.raises(ForcingUndefined):
        tab.evaluate([2.0], 2)
    with pytest.raises(ForcingUndefined):
        tab.evaluate([0.5], 3)
    with pytest.raises(ValueError):
        ForcingSpec.tabulated([0.0, 0.0], [[0.0], [1.0]])
    assert ForcingSpec.from_dict(tab.to_dict()).evaluate([0.25], 2)[:, 0] == pytest.approx([0.25, 2.5])
    syn = synthesize_forcing(forward_solution)
    assert syn.kind is ForcingKind.SYNTHESIZED
    back = ForcingSpec.from_dict(json.loads(json.dumps(syn.to_dict())))
    t = np.linspace(0, forward_solution.T, 50)
    assert np.array_equal(back.evaluate(t, 5), syn.evaluate(t, 5))
    assert syn.l1_norm(forward_solution.T, 5) > 0
    with pytest.raises(ValueError):
        ForcingSpec.from_dict(ForcingSpec.analytic(lambda t, n: np.zeros((n, t.size))).to_dict())
