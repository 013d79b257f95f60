#!/usr/bin/env python3
"""Benchmark the compiled nDCG kernel against the pure-Python fallback.

Generates a full-corpus-sized workload (many queries, padded-length ranked
gain lists), times both backends on identical arrays, and verifies their
outputs are bit-identical. Usage:

    python benchmarks/bench_kernels.py [--queries N] [--max-items M] [--repeats R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from escirank._kernels import BACKEND, fallback

try:
    from escirank._kernels import _ndcg as compiled
except ImportError:
    compiled = None

GAIN_POOL = np.array([1.0, 0.1, 0.01, 0.0])


def build_workload(n_queries: int, max_items: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, max_items + 1, size=n_queries)
    offsets = np.zeros(n_queries + 1, dtype=np.intp)
    np.cumsum(sizes, out=offsets[1:])
    gains = rng.choice(GAIN_POOL, size=int(offsets[-1]))
    return gains, offsets


def time_backend(fn, gains, offsets, repeats: int) -> tuple[float, tuple]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(gains, offsets)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--queries", type=int, default=200_000)
    parser.add_argument("--max-items", type=int, default=40)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    gains, offsets = build_workload(args.queries, args.max_items)
    total_items = int(offsets[-1])
    print(f"workload: {args.queries} queries, {total_items} ranked items, best of {args.repeats}")
    print(f"active backend at import: {BACKEND}")
    print()
    print(f"{'backend':<10}{'seconds':>12}{'queries/s':>16}{'speedup':>10}")

    python_time, python_result = time_backend(fallback.ndcg_segments, gains, offsets, args.repeats)
    print(f"{'python':<10}{python_time:>12.4f}{args.queries / python_time:>16.0f}{'1.0x':>10}")

    if compiled is None:
        print(f"{'compiled':<10}{'(not built)':>12}")
        return 0

    compiled_time, compiled_result = time_backend(compiled.ndcg_segments, gains, offsets, args.repeats)
    speedup = python_time / compiled_time
    print(
        f"{'compiled':<10}{compiled_time:>12.4f}"
        f"{args.queries / compiled_time:>16.0f}{speedup:>9.1f}x"
    )

    scores_match = np.array_equal(python_result[0], compiled_result[0])
    skips_match = python_result[1] == compiled_result[1]
    print()
    print(f"outputs bit-identical: {scores_match and skips_match}")
    return 0 if scores_match and skips_match else 1


if __name__ == "__main__":
    raise SystemExit(main())
