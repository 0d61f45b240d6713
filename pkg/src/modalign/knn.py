"""Exact top-k nearest-neighbor search by inner product on unit vectors.

Exact search only: every query is scanned against every gallery row, with
float64 accumulation and a deterministic total order (descending similarity,
ties broken by ascending gallery index). Results are a pure function of
(queries, gallery, k, self_map) regardless of block size or thread count.
On unit vectors this ordering is identical to cosine similarity and to
ascending L2 distance (d^2 = 2 - 2s).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._kernels import topk_kernel
from .store import EmbeddingSet


class KnnError(ValueError):
    """Raised for invalid search configurations."""


@dataclass(frozen=True)
class NeighborList:
    """Per-query top-k gallery indices with non-increasing similarities."""

    indices: np.ndarray       # (query_count, k) int64
    similarities: np.ndarray  # (query_count, k) float64
    gallery_count: int

    def __post_init__(self):
        if self.indices.shape != self.similarities.shape:
            raise KnnError("indices/similarities shape mismatch")
        self.indices.setflags(write=False)
        self.similarities.setflags(write=False)

    @property
    def query_count(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    def head(self, k: int) -> "NeighborList":
        """Prefix truncation: the exact top-k for any k <= self.k."""
        if not 1 <= k <= self.k:
            raise KnnError(f"cannot take head {k} of a k={self.k} list")
        return NeighborList(
            self.indices[:, :k].copy(),
            self.similarities[:, :k].copy(),
            self.gallery_count,
        )

    def to_jsonl(self, path, query_ids=None, gallery_ids=None) -> None:
        """Dump neighbor lists for qualitative inspection."""
        with open(path, "w", encoding="utf-8") as fh:
            for q in range(self.query_count):
                qid = query_ids[q] if query_ids is not None else q
                neighbors = []
                for j in range(self.k):
                    g = int(self.indices[q, j])
                    gid = gallery_ids[g] if gallery_ids is not None else g
                    neighbors.append(
                        {"gallery_id": gid,
                         "similarity": float(self.similarities[q, j])}
                    )
                fh.write(json.dumps(
                    {"query_id": qid, "neighbors": neighbors}) + "\n")


def _as_matrix(e) -> np.ndarray:
    if isinstance(e, EmbeddingSet):
        if not e.normalized:
            raise KnnError("unnormalized input: call normalize() first")
        return e.values
    arr = np.asarray(e, dtype=np.float32)
    if arr.ndim != 2:
        raise KnnError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def _default_block(nq: int) -> int:
    return int(min(nq, 512))


def topk(
    queries,
    gallery,
    k: int,
    self_map: Optional[Sequence[int]] = None,
    query_block: Optional[int] = None,
) -> NeighborList:
    """Exact top-k gallery neighbors for every query row.

    ``self_map`` gives, per query, one gallery index to exclude (its own
    storage row when query and gallery share a set); -1 means no exclusion.
    """
    q = _as_matrix(queries)
    g = _as_matrix(gallery)
    if q.shape[1] != g.shape[1]:
        raise KnnError(
            f"dimension mismatch: queries d={q.shape[1]}, gallery d={g.shape[1]}"
        )
    m = g.shape[0]
    if self_map is None:
        exclude = np.full(q.shape[0], -1, dtype=np.int64)
        k_max = m
    else:
        exclude = np.asarray(self_map, dtype=np.int64)
        if exclude.shape != (q.shape[0],):
            raise KnnError(
                f"self_map length {exclude.shape} does not match "
                f"query count {q.shape[0]}"
            )
        if exclude.max(initial=-1) >= m:
            raise KnnError("self_map index out of gallery range")
        k_max = m - 1 if (exclude >= 0).any() else m
    if not 1 <= k <= k_max:
        raise KnnError(
            f"k out of range: k={k}, usable gallery rows {k_max}"
        )
    block = query_block if query_block is not None else _default_block(q.shape[0])
    if block < 1:
        raise KnnError(f"query_block must be >= 1, got {block}")
    q = np.ascontiguousarray(q)
    g = np.ascontiguousarray(g)
    sims, idx = topk_kernel(q, g, k, exclude, block)
    return NeighborList(indices=idx, similarities=sims, gallery_count=m)


def topk_blocked_scaling(
    queries,
    gallery,
    k: int,
    block_sizes: Sequence[int],
    self_map: Optional[Sequence[int]] = None,
):
    """Run topk at several query block sizes; results must be identical.

    Returns (NeighborList, stats) where stats has one entry per block size
    with the measured throughput in gallery vectors scanned per second.
    """
    if not block_sizes:
        raise KnnError("block_sizes must be non-empty")
    result = None
    stats = []
    m = _as_matrix(gallery).shape[0]
    nq = _as_matrix(queries).shape[0]
    for block in block_sizes:
        t0 = time.perf_counter()
        out = topk(queries, gallery, k, self_map=self_map, query_block=block)
        dt = time.perf_counter() - t0
        stats.append(
            {
                "block_size": int(block),
                "seconds": dt,
                "vectors_per_sec": (nq * m) / dt if dt > 0 else float("inf"),
            }
        )
        if result is None:
            result = out
        else:
            if not (
                np.array_equal(result.indices, out.indices)
                and np.array_equal(result.similarities, out.similarities)
            ):
                raise KnnError(
                    f"block size {block} changed the result; determinism "
                    "contract violated"
                )
    return result, stats


def identity_self_map(n: int) -> np.ndarray:
    """Self-map for a shared query/gallery set: query i excludes row i."""
    return np.arange(n, dtype=np.int64)
