"""Hot numeric kernels, each in a numba ``@njit`` and a pure-numpy variant.

The numba top-k kernel fuses the inner-product scan with streaming selection:
every similarity is accumulated in float64 in a fixed four-lane order, so the
output is a pure function of the inputs, independent of thread count, block
partitioning, and gallery chunking. The numpy variant computes float64 GEMM
per (query block, gallery chunk) tile and merges running top-k state under
the same total order (descending similarity, ties by ascending gallery
index). Both variants return identical indices and tie order.
"""

from __future__ import annotations

import numpy as np

from .backend import HAS_NUMBA, numba_enabled

_GALLERY_CHUNK = 65536
_IDX_SENTINEL = np.int64(2**62)

if HAS_NUMBA:
    import numba
    from numba import njit, prange
else:  # pragma: no cover - numba is a declared dependency
    numba = None

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap

    prange = range


# ---------------------------------------------------------------------------
# top-k inner-product search
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, inline="always")
    def _dot_f64(q, g, d):
        # Fixed four-accumulator reduction; float32 products are exact in
        # float64, so the value depends only on the (fixed) summation order.
        acc0 = 0.0
        acc1 = 0.0
        acc2 = 0.0
        acc3 = 0.0
        r = d - (d % 4)
        for t in range(0, r, 4):
            acc0 += q[t] * g[t]
            acc1 += q[t + 1] * g[t + 1]
            acc2 += q[t + 2] * g[t + 2]
            acc3 += q[t + 3] * g[t + 3]
        for t in range(r, d):
            acc0 += q[t] * g[t]
        return (acc0 + acc1) + (acc2 + acc3)

    @njit(cache=True, parallel=True)
    def _topk_numba(queries, gallery, k, exclude, block, out_sim, out_idx):
        nq = queries.shape[0]
        d = queries.shape[1]
        m = gallery.shape[0]
        nblocks = (nq + block - 1) // block
        gchunk = 512
        for b in prange(nblocks):
            lo = b * block
            hi = min(lo + block, nq)
            q64 = queries[lo:hi].astype(np.float64)
            gbuf = np.empty((gchunk, d), dtype=np.float64)
            for i in range(lo, hi):
                for t in range(k):
                    out_sim[i, t] = -np.inf
                    out_idx[i, t] = _IDX_SENTINEL
            for c0 in range(0, m, gchunk):
                c1 = min(c0 + gchunk, m)
                cn = c1 - c0
                for jj in range(cn):
                    for t in range(d):
                        gbuf[jj, t] = gallery[c0 + jj, t]
                for i in range(lo, hi):
                    ex = exclude[i]
                    worst_sim = out_sim[i, k - 1]
                    worst_idx = out_idx[i, k - 1]
                    qrow = q64[i - lo]
                    for jj in range(cn):
                        j = c0 + jj
                        if j == ex:
                            continue
                        s = _dot_f64(qrow, gbuf[jj], d)
                        if s > worst_sim or (s == worst_sim and j < worst_idx):
                            pos = k - 1
                            while pos > 0 and (
                                s > out_sim[i, pos - 1]
                                or (
                                    s == out_sim[i, pos - 1]
                                    and j < out_idx[i, pos - 1]
                                )
                            ):
                                out_sim[i, pos] = out_sim[i, pos - 1]
                                out_idx[i, pos] = out_idx[i, pos - 1]
                                pos -= 1
                            out_sim[i, pos] = s
                            out_idx[i, pos] = j
                            worst_sim = out_sim[i, k - 1]
                            worst_idx = out_idx[i, k - 1]


def _merge_select(state_sim, state_idx, cand_sim, cand_idx, k):
    """Re-select top-k from running state plus candidates, per row."""
    nrows = state_sim.shape[0]
    for r in range(nrows):
        cs = cand_sim[r]
        ci = cand_idx[r]
        if ci.size == 0:
            continue
        all_sim = np.concatenate((state_sim[r], cs))
        all_idx = np.concatenate((state_idx[r], ci))
        order = np.lexsort((all_idx, -all_sim))[:k]
        state_sim[r] = all_sim[order]
        state_idx[r] = all_idx[order]


def _topk_numpy(queries, gallery, k, exclude, block, out_sim, out_idx):
    nq = queries.shape[0]
    m = gallery.shape[0]
    g64 = gallery.astype(np.float64)
    for lo in range(0, nq, block):
        hi = min(lo + block, nq)
        q64 = queries[lo:hi].astype(np.float64)
        b = hi - lo
        state_sim = np.full((b, k), -np.inf, dtype=np.float64)
        state_idx = np.full((b, k), _IDX_SENTINEL, dtype=np.int64)
        excl = exclude[lo:hi]
        for c0 in range(0, m, _GALLERY_CHUNK):
            c1 = min(c0 + _GALLERY_CHUNK, m)
            sims = q64 @ g64[c0:c1].T
            in_chunk = (excl >= c0) & (excl < c1)
            if in_chunk.any():
                rows = np.flatnonzero(in_chunk)
                sims[rows, excl[rows] - c0] = -np.inf
            thresh = state_sim[:, -1]
            mask = sims >= thresh[:, None]
            rows, cols = np.nonzero(mask)
            if rows.size:
                splits = np.searchsorted(rows, np.arange(1, b))
                cand_cols = np.split(cols, splits)
                cand_sim = [sims[r, cc] for r, cc in enumerate(cand_cols)]
                cand_idx = [cc.astype(np.int64) + c0 for cc in cand_cols]
                _merge_select(state_sim, state_idx, cand_sim, cand_idx, k)
        out_sim[lo:hi] = state_sim
        out_idx[lo:hi] = state_idx


def topk_kernel(queries, gallery, k, exclude, block):
    """Exact top-k by inner product. Returns (similarities, indices)."""
    nq = queries.shape[0]
    out_sim = np.empty((nq, k), dtype=np.float64)
    out_idx = np.empty((nq, k), dtype=np.int64)
    if numba_enabled():
        _topk_numba(queries, gallery, k, exclude, block, out_sim, out_idx)
    else:
        _topk_numpy(queries, gallery, k, exclude, block, out_sim, out_idx)
    return out_sim, out_idx


# ---------------------------------------------------------------------------
# sorted multiset overlap (mutual-kNN intersection counting)
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _overlap_numba(rows_a, rows_b, out):
        nq, k = rows_a.shape
        for i in prange(nq):
            a = np.sort(rows_a[i])
            b = np.sort(rows_b[i])
            cnt = 0
            x = 0
            y = 0
            while x < k and y < k:
                if a[x] == b[y]:
                    cnt += 1
                    x += 1
                    y += 1
                elif a[x] < b[y]:
                    x += 1
                else:
                    y += 1
            out[i] = cnt


def _occurrence_keys(rows):
    """Encode each element as (value, occurrence rank) in a single int64."""
    k = rows.shape[1]
    srt = np.sort(rows, axis=1)
    eq = srt[:, :, None] == srt[:, None, :]
    rank = np.tril(eq, -1).sum(axis=2)
    return srt * np.int64(k + 1) + rank


def _overlap_numpy(rows_a, rows_b, out):
    nq = rows_a.shape[0]
    chunk = max(1, 2**22 // max(1, rows_a.shape[1] ** 2))
    for lo in range(0, nq, chunk):
        hi = min(lo + chunk, nq)
        ka = _occurrence_keys(rows_a[lo:hi])
        kb = _occurrence_keys(rows_b[lo:hi])
        out[lo:hi] = (ka[:, :, None] == kb[:, None, :]).sum(axis=(1, 2))


def overlap_kernel(rows_a, rows_b):
    """Per-row multiset intersection size of two (q, k) int64 arrays.

    On unique-valued rows (neighbor indices) this is plain set overlap; on
    group-id rows it counts sum over groups of min(multiplicity_a,
    multiplicity_b), i.e. greedy one-to-one matching on shared groups.
    """
    if rows_a.shape != rows_b.shape:
        raise ValueError(
            f"row shape mismatch: {rows_a.shape} vs {rows_b.shape}"
        )
    out = np.empty(rows_a.shape[0], dtype=np.int64)
    if numba_enabled():
        _overlap_numba(
            np.ascontiguousarray(rows_a, dtype=np.int64),
            np.ascontiguousarray(rows_b, dtype=np.int64),
            out,
        )
    else:
        _overlap_numpy(
            np.asarray(rows_a, dtype=np.int64),
            np.asarray(rows_b, dtype=np.int64),
            out,
        )
    return out


# ---------------------------------------------------------------------------
# Hamming verification for near-duplicate candidate pairs
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, inline="always")
    def _popcount64(x):
        x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
        x = (x & np.uint64(0x3333333333333333)) + (
            (x >> np.uint64(2)) & np.uint64(0x3333333333333333)
        )
        x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)

    @njit(cache=True, parallel=True)
    def _verify_numba(hashes, ii, jj, threshold, out):
        for t in prange(ii.size):
            x = hashes[ii[t]] ^ hashes[jj[t]]
            out[t] = _popcount64(x) <= threshold


def hamming_verify_kernel(hashes, ii, jj, threshold):
    """Boolean mask of candidate pairs with Hamming distance <= threshold."""
    if numba_enabled():
        out = np.empty(ii.size, dtype=np.bool_)
        _verify_numba(
            hashes, ii, jj, np.uint64(threshold), out
        )
        return out
    return np.bitwise_count(hashes[ii] ^ hashes[jj]) <= threshold


def warmup():
    """Compile the numba kernels on tiny inputs (no-op on numpy backend)."""
    if not numba_enabled():
        return
    q = np.zeros((2, 4), dtype=np.float32)
    g = np.eye(4, dtype=np.float32)
    topk_kernel(q, g, 1, np.full(2, -1, dtype=np.int64), 2)
    overlap_kernel(
        np.zeros((2, 2), dtype=np.int64), np.zeros((2, 2), dtype=np.int64)
    )
    hamming_verify_kernel(
        np.zeros(2, dtype=np.uint64),
        np.zeros(1, dtype=np.int64),
        np.ones(1, dtype=np.int64),
        2,
    )
