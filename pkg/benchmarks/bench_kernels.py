"""Compare the compiled kernels against the pure-numpy fallback.

Run from a checkout with the package installed:

    python3 benchmarks/bench_kernels.py [--repeats 5]

Each kernel is timed on workloads shaped like the 2D benchmark problems.
The point of the compiled path is the displaced-grid point location, which
is a per-query Newton iteration with data-dependent memory access; the
stencil kernels are bandwidth-bound and the fallback is expected to be
competitive there.
"""
from __future__ import annotations

import argparse
import importlib
import os
import sys
import time

import numpy as np


def _load(force_fallback: bool):
    os.environ["LAGROM_FORCE_FALLBACK"] = "1" if force_fallback else "0"
    for name in list(sys.modules):
        if name.startswith("lagrom"):
            del sys.modules[name]
    return importlib.import_module("lagrom._kernels")


def _workloads(n=128, seed=0):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((n, n))
    vx = rng.standard_normal((n, n))
    vy = rng.standard_normal((n, n))
    dx = dy = 4.0 / n
    X, Y = np.meshgrid(np.arange(n) * dx, np.arange(n) * dy, indexing="ij")
    # mildly deformed node positions, as after some moving-frame steps
    chi = X + 0.3 * dx * np.sin(2 * np.pi * Y / 4.0)
    zeta = Y + 0.3 * dy * np.cos(2 * np.pi * X / 4.0)
    qx = rng.uniform(0, 4, n * n)
    qy = rng.uniform(0, 4, n * n)
    diag = 2.0 + rng.uniform(0.1, 1.0, n * n)
    lower = -rng.uniform(0.1, 0.5, n * n)
    upper = -rng.uniform(0.1, 0.5, n * n)
    rhs = rng.standard_normal(n * n)
    return {
        "laplacian5_periodic": lambda k: k.laplacian5_periodic(f, dx, dy),
        "upwind_advect_periodic": lambda k: k.upwind_advect_periodic(f, vx, vy, dx, dy),
        "bilinear_sample_periodic": lambda k: k.bilinear_sample_periodic(
            f, qx, qy, 0.0, 0.0, dx, dy),
        "locate_displaced_bilinear": lambda k: k.locate_displaced_bilinear(
            chi, zeta, qx, qy, 0.0, 0.0, dx, dy, 4.0, 4.0),
        "cyclic_tridiag_solve": lambda k: k.cyclic_tridiag_solve(lower, diag, upper, rhs),
    }


def _time(fn, k, repeats):
    fn(k)  # warm up
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(k)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--size", type=int, default=128)
    args = ap.parse_args()

    native = _load(False)
    if native.IMPL != "native":
        print("compiled extension unavailable; benchmarking fallback only")
    fallback = _load(True)
    assert fallback.IMPL == "fallback"

    work = _workloads(args.size)
    print(f"{'kernel':<28} {'fallback':>10} {'native':>10} {'speedup':>8}")
    for name, fn in work.items():
        tf = _time(fn, fallback, args.repeats)
        if native.IMPL == "native":
            tn = _time(fn, native, args.repeats)
            print(f"{name:<28} {tf * 1e3:>8.3f}ms {tn * 1e3:>8.3f}ms {tf / tn:>7.1f}x")
        else:
            print(f"{name:<28} {tf * 1e3:>8.3f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
