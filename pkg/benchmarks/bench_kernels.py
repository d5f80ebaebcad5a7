#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the six hot elementwise kernels plus one end-to-end criterion
evaluation per backend.  The backend is chosen at import time, so the
script re-executes itself with DUALDIV_PURE_PYTHON=1 to get the
fallback numbers.

Usage: python benchmarks/bench_kernels.py [--size N] [--repeats R]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

GAMMAS = (-1.0, 0.0, 0.5, 1.0, 2.0)


def bench_kernels(size, repeats):
    from dualdiv import kernels

    rng = np.random.default_rng(7)
    t = rng.normal(0.0, 2.0, size)
    lw = rng.normal(-3.0, 1.0, size)
    rows = []
    for name in ("phi", "phi_prime", "phi_sharp",
                 "phi_exp", "phi_prime_exp", "phi_sharp_exp",
                 "phi_exp_w", "phi_prime_exp_w", "phi_sharp_exp_w"):
        fn = getattr(kernels, name)
        args = (t, lw) if name.endswith("_w") else (t,)
        fn(0.5, *args)  # warm up
        best = min(_timed(fn, 0.5, *args) for _ in range(repeats))
        # average over gammas to exercise every code path
        per_gamma = []
        for g in GAMMAS:
            per_gamma.append(min(_timed(fn, g, *args) for _ in range(repeats)))
        rows.append((name, best, sum(per_gamma) / len(per_gamma)))
    return kernels.BACKEND, rows


def _timed(fn, *args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def bench_criterion(repeats):
    from dualdiv import DualCriterion, PowerGenerator, make_model

    model = make_model("exponential")
    crit = DualCriterion(PowerGenerator(2.0), model)
    sample = model.draw_sample(np.array([1.3]), 500, seed=0)
    theta, alpha = np.array([1.1]), np.array([1.3])
    crit.empirical(theta, alpha, sample)  # warm up / caches
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        crit.empirical(theta, alpha, sample)
        best = min(best, time.perf_counter() - t0)
    return best


def run(size, repeats):
    backend, rows = bench_kernels(size, repeats)
    crit_t = bench_criterion(repeats)
    print(f"backend: {backend}  (n = {size:,})")
    print(f"{'kernel':<18}{'gamma=0.5':>12}{'mean over gammas':>18}")
    for name, best, mean in rows:
        print(f"{name:<18}{best * 1e3:>10.3f}ms{mean * 1e3:>16.3f}ms")
    print(f"{'empirical criterion (n=500)':<30}{crit_t * 1e3:>10.3f}ms")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--single", action="store_true",
                    help="benchmark only the currently selected backend")
    args = ap.parse_args(argv)

    run(args.size, args.repeats)
    if not args.single and os.environ.get("DUALDIV_PURE_PYTHON", "") in ("", "0"):
        print(flush=True)
        env = dict(os.environ, DUALDIV_PURE_PYTHON="1")
        subprocess.run([sys.executable, __file__, "--single",
                        "--size", str(args.size),
                        "--repeats", str(args.repeats)], env=env, check=True)


if __name__ == "__main__":
    main()
