"""Benchmark the compiled kernels against the pure-numpy fallback.

Times each hot kernel on fig2-scale workloads, then an end-to-end
continuous-clustering run under each backend.  Run from the repo root:

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

import typedbandits._kernels as kernels
from typedbandits._kernels import _fallback

try:
    from typedbandits._kernels import _speedups
except ImportError:
    _speedups = None


def timeit(fn, *args, repeat=5, inner=1):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / inner)
    return best


def bench_kernels(quick: bool):
    rng = np.random.default_rng(0)
    rows = []

    means = np.ascontiguousarray(rng.random((21, 21)))
    emp = np.ascontiguousarray(means[7] + rng.normal(0, 0.01, 21))
    rows.append(("match_type (21x21)", 10_000,
                 (means, emp, 0.025)))

    arm_means = rng.random(21)
    counts = rng.integers(1, 500, 21).astype(np.float64)
    subset = np.arange(21, dtype=np.int64)
    rows.append(("ucb_argmax (21 arms)", 10_000,
                 (arm_means, counts, float(np.log(counts.sum())), subset)))

    for n in (250, 1_000, 2_000):
        pts = np.ascontiguousarray(
            np.vstack([rng.normal(0.55, 0.1, (n // 2, 4)),
                       rng.normal(0.52, 0.1, (n - n // 2, 4))]).clip(0, 1))
        uniforms = rng.random((5, 2))
        rows.append((f"kmeans_fit (n={n}, 5 restarts)",
                     20 if n < 2_000 else 10, (pts, 2, uniforms, 100)))

    ucounts = rng.integers(0, 30, (2_000, 4)).astype(np.float64)
    usums = (ucounts * rng.random((2_000, 4))).round()
    labels = rng.integers(0, 2, 2_000).astype(np.int32)
    rows.append(("pool_ucb_select (n=2000)", 2_000,
                 (ucounts, usums, labels, 1)))

    print(f"{'kernel':36s} {'numpy':>12s} {'cython':>12s} {'speedup':>9s}")
    for name, inner, args in rows:
        if quick:
            inner = max(1, inner // 10)
        t_py = timeit(getattr(_fallback, name.split(" ")[0]), *args,
                      inner=inner)
        if _speedups is None:
            print(f"{name:36s} {t_py * 1e6:10.1f}us {'n/a':>12s} {'':>9s}")
            continue
        t_cy = timeit(getattr(_speedups, name.split(" ")[0]), *args,
                      inner=inner)
        print(f"{name:36s} {t_py * 1e6:10.1f}us {t_cy * 1e6:10.1f}us "
              f"{t_py / t_cy:8.1f}x")


def bench_end_to_end(quick: bool):
    import dataclasses

    from typedbandits.cli import preset_fig2
    from typedbandits.env import run_experiment

    cfg = preset_fig2()
    users = 60 if quick else 300
    arrival = dataclasses.replace(cfg.arrival, num_users=users)
    spec = cfg.algorithms[1]  # cluster-ucb-continuous, recluster every slot
    names = ("match_type", "ucb_argmax", "kmeans_fit", "pool_ucb_select")
    results = {}
    backends = [("numpy", _fallback)]
    if _speedups is not None:
        backends.append(("cython", _speedups))
    saved = {n: getattr(kernels, n) for n in names}
    try:
        for label, module in backends:
            for n in names:
                setattr(kernels, n, getattr(module, n))
            start = time.perf_counter()
            trace = run_experiment(cfg.params(), arrival, spec, seed=1)
            results[label] = (time.perf_counter() - start, trace.final_regret)
    finally:
        for n, fn in saved.items():
            setattr(kernels, n, fn)

    print(f"\nend-to-end continuous clustering, {users} users x 100 slots:")
    for label, (seconds, regret) in results.items():
        print(f"  {label:8s} {seconds:7.2f}s  (final regret {regret:.1f})")
    if len(results) == 2:
        print(f"  speedup  {results['numpy'][0] / results['cython'][0]:.1f}x")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads for a fast smoke run")
    args = parser.parse_args()
    print(f"active package backend: {kernels.BACKEND}\n")
    bench_kernels(args.quick)
    bench_end_to_end(args.quick)
