"""Wall time of the compiled IFRK4 kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--steps 20000] [--repeat 3]

Both kernels integrate the same forced forward-cascade run; the script
prints steps per second for each and the largest difference of the end
states (they follow the same arithmetic, so it is round-off).
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from dyad import kernels
from dyad.core import ModelSpec
from dyad.verifier import standard_data


def _inputs(N, steps, dt):
    model = ModelSpec.forward(2.0, 2.0)
    s = standard_data(N, model.lam)
    ra, rb = model.damping(N + 1)
    F = np.zeros((2 * steps + 1, N + 1))
    F[:, 0] = 1.0
    return (s.a, s.b, model.coupling(N + 1), ra, rb, *model.cascade_coeffs, F, dt, steps, 1)


def _time(kernel, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernel(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--shells", type=int, default=16)
    ap.add_argument("--dt", type=float, default=5e-5)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    args = _inputs(a.shells, a.steps, a.dt)
    rows = []
    tp, op = _time(kernels.python_run_ifrk4, args, a.repeat)
    rows.append(("python", tp))
    compiled = kernels.compiled_run_ifrk4()
    if compiled is None:
        print("compiled kernel not built; only the numpy fallback was timed")
    else:
        tc, oc = _time(compiled, args, a.repeat)
        rows.append(("cython", tc))
        diff = max(np.max(np.abs(op[0] - oc[0])), np.max(np.abs(op[1] - oc[1])))
    print(f"{'backend':8s} {'seconds':>10s} {'steps/s':>12s}")
    for name, t in rows:
        print(f"{name:8s} {t:10.4f} {a.steps / t:12.0f}")
    if compiled is not None:
        print(f"speedup  {tp / tc:.1f}x   max end-state difference {diff:.3e}")


if __name__ == "__main__":
    main()
