#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Covers the three hot paths: top-k inner-product search (also swept over
query block sizes via the blocked harness), neighbor-overlap counting, and
Hamming verification of near-duplicate candidates. Both backends must return
identical indices; this script times them and prints a table.

Usage:
    python3 benchmarks/bench_backends.py [--gallery 200000] [--queries 512]
"""

import argparse
import time

import numpy as np

import modalign.backend as backend
from modalign._kernels import hamming_verify_kernel, overlap_kernel, warmup
from modalign.knn import topk, topk_blocked_scaling
from modalign.store import EmbeddingSet


def normalized_set(rng, n, d):
    values = rng.standard_normal((n, d), dtype=np.float32)
    values /= np.linalg.norm(values, axis=1, keepdims=True)
    return EmbeddingSet(values, normalized=True)


def timed(fn, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--gallery", type=int, default=200_000)
    parser.add_argument("--queries", type=int, default=512)
    parser.add_argument("--dim", type=int, default=128)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--hashes", type=int, default=2_000_000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    gallery = normalized_set(rng, args.gallery, args.dim)
    queries = normalized_set(rng, args.queries, args.dim)
    rows_a = rng.integers(0, args.gallery, size=(100_000, 10)).astype(np.int64)
    rows_b = rng.integers(0, args.gallery, size=(100_000, 10)).astype(np.int64)
    hashes = rng.integers(0, 2**64, size=args.hashes, dtype=np.uint64)
    pairs_i = rng.integers(0, args.hashes, size=1_000_000).astype(np.int64)
    pairs_j = rng.integers(0, args.hashes, size=1_000_000).astype(np.int64)

    header = f"{'kernel':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))

    results = {}
    for use_numba in (True, False):
        backend.set_numba(use_numba)
        if use_numba:
            warmup()
        label = "numba" if use_numba else "numpy"
        t, out = timed(lambda: topk(queries, gallery, args.k))
        results.setdefault("topk", {})[label] = (t, out.indices)
        t, _ = timed(lambda: overlap_kernel(rows_a, rows_b))
        results.setdefault("overlap", {})[label] = (t, None)
        t, _ = timed(
            lambda: hamming_verify_kernel(hashes, pairs_i, pairs_j, 2))
        results.setdefault("hamming-verify", {})[label] = (t, None)
    backend.set_numba(backend.HAS_NUMBA)

    for name, res in results.items():
        tn, tp = res["numba"][0], res["numpy"][0]
        print(f"{name:<28}{tn:>11.3f}s{tp:>11.3f}s{tp / tn:>9.2f}x")

    assert np.array_equal(results["topk"]["numba"][1],
                          results["topk"]["numpy"][1]), "backends disagree"

    print("\nblocked scaling (numba backend, vectors/sec):")
    _, stats = topk_blocked_scaling(queries, gallery, args.k,
                                    [64, 256, 1024])
    for s in stats:
        print(f"  block {s['block_size']:>5}: {s['vectors_per_sec']:.3e}")


if __name__ == "__main__":
    main()
