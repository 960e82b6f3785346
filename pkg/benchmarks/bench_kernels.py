#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--repeats N]

Covers the three hot paths: the nearest-distance scan, the patch SGD
step loop, and dense grid-logit evaluation. The numba variants are
warmed up once before timing so compilation cost is excluded; run with
PATCHBOUND_NUMBA=0 to confirm the package itself still works without
numba (this script imports both paths explicitly either way).
"""

import argparse
import time

import numpy as np

from patchbound import _kernels


def best_of(fn, repeats, *args):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def bench_min_sq_dists(repeats):
    rng = np.random.default_rng(0)
    samples = rng.random((100_000, 16))
    queries = rng.random((100, 16))
    args = (samples, queries)
    return "nearest-distance scan (N=100k, D=16, Q=100)", args, args


def bench_sgd(repeats):
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, (5000, 32, 32, 3)).astype(np.uint8)
    labels = rng.integers(0, 4, 5000)
    steps, batch = 2000, 64
    idx = rng.integers(0, 5000, (steps, batch))
    pos = rng.integers(0, 32 - 8 + 1, (2, steps, batch))

    def args():
        return (images, labels, idx, pos[0], pos[1], 8, 8, 0.05,
                np.zeros((4, 192)), np.zeros(4), np.empty(steps))

    return "patch SGD (2000 steps, batch 64, 8x8x3)", args(), args()


def bench_grid_logits(repeats):
    rng = np.random.default_rng(2)
    image = rng.integers(0, 256, (96, 96, 3)).astype(np.uint8)
    weights = rng.normal(size=(10, 8 * 8 * 3))
    bias = rng.normal(size=10)
    args = (image, 8, 8, 1, 1, weights, bias)
    return "grid logits (96x96 image, 8x8 patches, stride 1)", args, args


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    pairs = [
        (bench_min_sq_dists, _kernels.min_sq_dists_numpy,
         _kernels.min_sq_dists_numba),
        (bench_sgd, _kernels.sgd_softmax_numpy, _kernels.sgd_softmax_numba),
        (bench_grid_logits, _kernels.grid_logits_numpy,
         _kernels.grid_logits_numba),
    ]

    print(f"active backend: {_kernels.active_backend()}")
    print(f"{'kernel':<50} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    print("-" * 82)
    for setup, numpy_fn, numba_fn in pairs:
        name, numpy_args, numba_args = setup(args.repeats)
        t_numpy = best_of(numpy_fn, args.repeats, *numpy_args)
        if numba_fn is None:
            print(f"{name:<50} {t_numpy * 1e3:>8.1f}ms {'n/a':>10} {'n/a':>9}")
            continue
        numba_fn(*numba_args)  # warm-up / compile
        t_numba = best_of(numba_fn, args.repeats, *numba_args)
        print(f"{name:<50} {t_numpy * 1e3:>8.1f}ms {t_numba * 1e3:>8.1f}ms "
              f"{t_numpy / t_numba:>8.1f}x")


if __name__ == "__main__":
    main()
