"""Corpus deduplication: perceptual hashing, near-duplicate clustering,
exact-string caption passes, and many-to-many group construction.

The 64-bit perceptual hash thresholds the top-left 8x8 block (DC included)
of the 2-D type-II DCT of a 32x32 bilinear reduction against the block's
median. Near-duplicates are pairs at Hamming distance <= 2; clustering is
the transitive closure of that relation, resolved keep-first. Candidate
generation splits each hash into four 16-bit chunks: any pair within
distance 2 agrees exactly on at least two chunks, so probing the six
chunk-pair tables is complete.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.fft import dctn

from ._kernels import hamming_verify_kernel
from .store import Manifest, ManifestRow, substream


class DedupError(ValueError):
    """Raised for invalid dedup inputs."""


# ---------------------------------------------------------------------------
# perceptual hash
# ---------------------------------------------------------------------------

_BT601 = np.array([0.299, 0.587, 0.114], dtype=np.float64)
HASH_SIZE = 8
RESIZE_TO = 32


def _to_grayscale(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim == 2:
        return arr.astype(np.float64)
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        return arr[:, :, :3].astype(np.float64) @ _BT601
    raise DedupError(
        f"image must be HxW grayscale or HxWx3/4 color, got shape {arr.shape}"
    )


def _bilinear_resize(gray: np.ndarray, size: int) -> np.ndarray:
    """Half-pixel-center bilinear resize with edge clamping.

    Uses the lerp form so a constant image resizes to exactly that
    constant, which the constant-image hash contract depends on.
    """
    h, w = gray.shape
    if h < 1 or w < 1:
        raise DedupError(f"degenerate image shape {gray.shape}")

    def axis_coords(n_in, n_out):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        lo = np.clip(np.floor(pos), 0, n_in - 1).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = np.clip(pos - lo, 0.0, 1.0)
        return lo, hi, frac

    ylo, yhi, fy = axis_coords(h, size)
    xlo, xhi, fx = axis_coords(w, size)
    top = gray[np.ix_(ylo, xlo)]
    top = top + fx[None, :] * (gray[np.ix_(ylo, xhi)] - top)
    bot = gray[np.ix_(yhi, xlo)]
    bot = bot + fx[None, :] * (gray[np.ix_(yhi, xhi)] - bot)
    return top + fy[:, None] * (bot - top)


def dct2_top_block(small: np.ndarray, block: int = HASH_SIZE) -> np.ndarray:
    """Top-left block of the unnormalized 2-D type-II DCT.

    Evaluated on the mean-centered image with the DC term restored
    analytically, so an exactly constant input yields exact zeros in every
    AC position.
    """
    mean = small.mean()
    coeffs = dctn(small - mean, type=2)
    coeffs[0, 0] += 4.0 * small.size * mean
    return coeffs[:block, :block]


def phash(image: np.ndarray) -> int:
    """64-bit perceptual hash of a decoded raster.

    Pipeline: BT.601 grayscale, bilinear resize to 32x32, 2-D type-II DCT,
    top-left 8x8 coefficients (DC included) thresholded strictly above
    their median, packed row-major MSB-first.
    """
    gray = _to_grayscale(image)
    small = _bilinear_resize(gray, RESIZE_TO)
    block = dct2_top_block(small)
    flat = block.reshape(-1)
    median = np.median(flat)
    bits = flat > median
    value = 0
    for t, b in enumerate(bits):
        if b:
            value |= 1 << (63 - t)
    return value


def phash_file(path) -> int:
    """Hash an image file; raises DedupError if it cannot be decoded."""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise DedupError(f"undecodable image {path}: {exc}")
    return phash(arr)


def hamming(h1: int, h2: int) -> int:
    """Number of differing bit positions between two 64-bit hashes."""
    return ((int(h1) ^ int(h2)) & 0xFFFFFFFFFFFFFFFF).bit_count()


# ---------------------------------------------------------------------------
# near-duplicate search
# ---------------------------------------------------------------------------

_CHUNK_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _chunks(hashes: np.ndarray) -> list[np.ndarray]:
    mask = np.uint64(0xFFFF)
    return [
        (hashes >> np.uint64(16 * c)) & mask for c in range(4)
    ]


def _pair_keys(hashes: np.ndarray) -> list[np.ndarray]:
    ch = _chunks(hashes)
    return [
        (ch[a] << np.uint64(16)) | ch[b] for a, b in _CHUNK_PAIRS
    ]


class UnionFind:
    """Disjoint sets over [0, n) with path halving and union by rank."""

    def __init__(self, n: int, parent: Optional[np.ndarray] = None):
        self.parent = (
            np.arange(n, dtype=np.int64) if parent is None
            else np.asarray(parent, dtype=np.int64).copy()
        )
        self.rank = np.zeros(n, dtype=np.int8)

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return int(x)

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1


def _bucket_pairs(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All within-bucket index pairs (i < j) for one key table."""
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    boundaries = np.flatnonzero(sorted_keys[1:] != sorted_keys[:-1]) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [keys.size]))
    ii, jj = [], []
    for s, e in zip(starts, ends):
        if e - s < 2:
            continue
        bucket = np.sort(order[s:e])
        a, b = np.triu_indices(bucket.size, k=1)
        ii.append(bucket[a])
        jj.append(bucket[b])
    if not ii:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(ii), np.concatenate(jj)


def _candidate_pairs(hashes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = hashes.size
    all_i, all_j = [], []
    for keys in _pair_keys(hashes):
        ii, jj = _bucket_pairs(keys)
        all_i.append(ii)
        all_j.append(jj)
    ii = np.concatenate(all_i)
    jj = np.concatenate(all_j)
    if ii.size == 0:
        return ii, jj
    encoded = np.unique(ii * np.int64(n) + jj)
    return encoded // n, encoded % n


def _brute_pairs(
    hashes: np.ndarray, threshold: int
) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs scan used for thresholds beyond the indexed fast path."""
    n = hashes.size
    ii, jj = [], []
    chunk = max(1, 2**24 // max(1, n))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        dist = np.bitwise_count(hashes[lo:hi, None] ^ hashes[None, :])
        rows, cols = np.nonzero(dist <= threshold)
        keep = (rows + lo) < cols
        ii.append((rows[keep] + lo).astype(np.int64))
        jj.append(cols[keep].astype(np.int64))
    if not ii:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(ii), np.concatenate(jj)


def find_near_duplicates(
    hashes: Sequence[int], threshold: int = 2
) -> list[np.ndarray]:
    """Connected components of the Hamming<=threshold graph.

    Returns every component (singletons included), each sorted ascending,
    ordered by first member. For threshold <= 2 candidates come from the
    chunk-pair index; larger thresholds fall back to an all-pairs scan.
    """
    h = np.asarray(list(hashes), dtype=np.uint64)
    n = h.size
    if n == 0:
        return []
    uniq, inverse = np.unique(h, return_inverse=True)
    firsts = np.full(uniq.size, n, dtype=np.int64)
    np.minimum.at(firsts, inverse, np.arange(n, dtype=np.int64))

    if threshold <= 2:
        ci, cj = _candidate_pairs(uniq)
        if ci.size:
            ok = hamming_verify_kernel(uniq, ci, cj, threshold)
            ci, cj = ci[ok], cj[ok]
    else:
        ci, cj = _brute_pairs(uniq, threshold)

    uf = UnionFind(n, parent=firsts[inverse])
    for a, b in zip(firsts[ci], firsts[cj]):
        uf.union(int(a), int(b))
    labels = np.fromiter(
        (uf.find(i) for i in range(n)), dtype=np.int64, count=n
    )
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    boundaries = np.flatnonzero(sorted_labels[1:] != sorted_labels[:-1]) + 1
    groups = np.split(order, boundaries)
    groups.sort(key=lambda g: g[0])
    return [np.sort(g) for g in groups]


def _cross_removed(
    gallery_hashes: np.ndarray, query_hashes: np.ndarray, threshold: int
) -> np.ndarray:
    """Mask of gallery items within threshold of any query hash."""
    n = gallery_hashes.size
    removed = np.zeros(n, dtype=bool)
    if query_hashes.size == 0:
        return removed
    if threshold > 2:
        chunk = max(1, 2**24 // max(1, query_hashes.size))
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            dist = np.bitwise_count(
                gallery_hashes[lo:hi, None] ^ query_hashes[None, :]
            )
            removed[lo:hi] = (dist <= threshold).any(axis=1)
        return removed
    g_tables = _pair_keys(gallery_hashes)
    q_tables = _pair_keys(query_hashes)
    cand_g, cand_q = [], []
    for gk, qk in zip(g_tables, q_tables):
        qs = np.sort(qk)
        lo = np.searchsorted(qs, gk, side="left")
        hi = np.searchsorted(qs, gk, side="right")
        counts = hi - lo
        rows = np.flatnonzero(counts)
        if rows.size == 0:
            continue
        reps = counts[rows]
        cand_g.append(np.repeat(rows, reps))
        order = np.argsort(qk, kind="stable")
        spans = [order[lo[r]:hi[r]] for r in rows]
        cand_q.append(np.concatenate(spans))
    if not cand_g:
        return removed
    gi = np.concatenate(cand_g)
    qi = np.concatenate(cand_q)
    combined = np.concatenate((gallery_hashes, query_hashes))
    ok = hamming_verify_kernel(combined, gi, qi + n, threshold)
    removed[np.unique(gi[ok])] = True
    return removed


# ---------------------------------------------------------------------------
# gallery deduplication pipeline
# ---------------------------------------------------------------------------

@dataclass
class DedupResult:
    """Outcome of the four-stage dedup pipeline over one gallery."""

    removed_vs_queries: np.ndarray
    removed_within: np.ndarray
    kept: np.ndarray
    clusters: list[np.ndarray]
    stats: dict

    def to_json(self, path) -> None:
        payload = {
            "stats": self.stats,
            "removed_vs_queries": self.removed_vs_queries.tolist(),
            "removed_within": self.removed_within.tolist(),
            "kept_count": int(self.kept.size),
            "clusters": [c.tolist() for c in self.clusters],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")


def dedup_gallery(
    gallery_hashes: Sequence[int],
    query_hashes: Sequence[int],
    gallery_captions: Sequence[str],
    query_captions: Sequence[str],
    threshold: int = 2,
) -> DedupResult:
    """Four-stage pipeline: image-vs-query, image-within (keep first),
    caption-vs-query (exact string), caption-within (keep first).

    Each stage only sees survivors of the previous ones, so an item that is
    both an image duplicate and a caption duplicate is attributed to the
    image pass in the stats.
    """
    g_hashes = np.asarray(list(gallery_hashes), dtype=np.uint64)
    q_hashes = np.asarray(list(query_hashes), dtype=np.uint64)
    g_caps = list(gallery_captions)
    q_caps = list(query_captions)
    n = g_hashes.size
    if len(g_caps) != n:
        raise DedupError(
            f"gallery has {n} hashes but {len(g_caps)} captions"
        )
    if len(q_caps) != q_hashes.size:
        raise DedupError(
            f"query set has {q_hashes.size} hashes but {len(q_caps)} captions"
        )

    alive = np.ones(n, dtype=bool)
    removed_vs_queries, removed_within = [], []
    clusters: list[np.ndarray] = []

    # stage 1: image duplicates against the query set
    img_q_mask = _cross_removed(g_hashes, q_hashes, threshold)
    removed_vs_queries.append(np.flatnonzero(img_q_mask))
    alive &= ~img_q_mask
    img_q_count = int(img_q_mask.sum())

    # stage 2: image duplicates within the gallery, keep first
    survivors = np.flatnonzero(alive)
    img_within_count = 0
    for comp in find_near_duplicates(g_hashes[survivors], threshold):
        if comp.size < 2:
            continue
        original = survivors[comp]
        clusters.append(original)
        removed_within.append(original[1:])
        alive[original[1:]] = False
        img_within_count += original.size - 1

    # stage 3: captions matching a query caption, exact string
    query_cap_set = set(q_caps)
    cap_q = np.array(
        [alive[i] and g_caps[i] in query_cap_set for i in range(n)],
        dtype=bool,
    )
    removed_vs_queries.append(np.flatnonzero(cap_q))
    alive &= ~cap_q
    cap_q_count = int(cap_q.sum())

    # stage 4: caption duplicates within the gallery, keep first
    seen: dict[str, list[int]] = {}
    for i in np.flatnonzero(alive):
        seen.setdefault(g_caps[i], []).append(int(i))
    cap_within_count = 0
    for members in seen.values():
        if len(members) < 2:
            continue
        arr = np.asarray(members, dtype=np.int64)
        clusters.append(arr)
        removed_within.append(arr[1:])
        alive[arr[1:]] = False
        cap_within_count += arr.size - 1

    clusters.sort(key=lambda c: int(c[0]))
    kept = np.flatnonzero(alive)
    rvq = (
        np.sort(np.concatenate(removed_vs_queries))
        if removed_vs_queries else np.empty(0, dtype=np.int64)
    )
    rw = (
        np.sort(np.concatenate(removed_within))
        if removed_within else np.empty(0, dtype=np.int64)
    )
    stats = {
        "raw_pool": int(n),
        "image_duplicates_with_queries": img_q_count,
        "image_duplicates_within_gallery": img_within_count,
        "caption_duplicates_with_queries": cap_q_count,
        "caption_duplicates_within_gallery": cap_within_count,
        "duplicates_with_queries": img_q_count + cap_q_count,
        "duplicates_within_gallery": img_within_count + cap_within_count,
        "final_pool_size": int(kept.size),
    }
    return DedupResult(
        removed_vs_queries=rvq,
        removed_within=rw,
        kept=kept,
        clusters=clusters,
        stats=stats,
    )


# ---------------------------------------------------------------------------
# many-to-many group construction
# ---------------------------------------------------------------------------

DIRECTIONS = ("text_to_images", "image_to_texts")


@dataclass
class GroupDataset:
    """Groups of corresponding samples with a fixed per-group take."""

    groups: dict[str, np.ndarray]
    min_multiplicity: int
    per_group_take: int

    def selected_indices(self) -> np.ndarray:
        if not self.groups:
            return np.empty(0, dtype=np.int64)
        return np.concatenate([self.groups[k] for k in sorted(self.groups)])

    def to_manifest(self, manifest: Manifest) -> Manifest:
        """Flat dataset of the selected rows with group_id set."""
        rows = []
        for key in sorted(self.groups):
            for idx in self.groups[key]:
                src = manifest.rows[int(idx)]
                rows.append(
                    ManifestRow(
                        id=src.id,
                        modality=src.modality,
                        source_id=src.source_id,
                        group_id=key,
                        class_label=src.class_label,
                    )
                )
        return Manifest(rows)


def build_groups(
    manifest: Manifest,
    direction: str,
    min_multiplicity: int,
    per_group_take: int,
    seed: int,
    content_keys: Optional[Sequence[str]] = None,
) -> GroupDataset:
    """Group one modality's rows by source identity and sample members.

    Rows of the grouped modality (images for text_to_images, texts for
    image_to_texts) are keyed by source_id; within-group exact duplicates
    (same content key) are dropped keep-first before the multiplicity
    threshold is applied. Retained groups get per_group_take members chosen
    deterministically by the seed.
    """
    if direction not in DIRECTIONS:
        raise DedupError(f"unknown direction {direction!r}")
    if min_multiplicity < per_group_take:
        raise DedupError(
            f"min_multiplicity {min_multiplicity} is smaller than "
            f"per_group_take {per_group_take}"
        )
    modality = "image" if direction == "text_to_images" else "text"
    keys = (
        list(content_keys) if content_keys is not None
        else [r.id for r in manifest.rows]
    )
    if len(keys) != len(manifest):
        raise DedupError(
            f"got {len(keys)} content keys for {len(manifest)} manifest rows"
        )

    members: dict[str, list[int]] = {}
    seen_content: dict[str, set] = {}
    for i, row in enumerate(manifest.rows):
        if row.modality != modality:
            continue
        content = seen_content.setdefault(row.source_id, set())
        if keys[i] in content:
            continue
        content.add(keys[i])
        members.setdefault(row.source_id, []).append(i)

    rng = substream(seed, "groups")
    groups: dict[str, np.ndarray] = {}
    for key in sorted(members):
        rows = np.asarray(members[key], dtype=np.int64)
        if rows.size < min_multiplicity:
            continue
        perm = rng.permutation(rows.size)[:per_group_take]
        groups[key] = np.sort(rows[perm])
    return GroupDataset(
        groups=groups,
        min_multiplicity=min_multiplicity,
        per_group_take=per_group_take,
    )


# ---------------------------------------------------------------------------
# hash cache
# ---------------------------------------------------------------------------

def write_hash_cache(path, ids: Sequence[str], hashes: Sequence[int]) -> None:
    if len(ids) != len(list(hashes)):
        raise DedupError("ids and hashes differ in length")
    with open(path, "w", encoding="utf-8") as fh:
        for sid, h in zip(ids, hashes):
            fh.write(json.dumps(
                {"id": sid, "phash_hex": f"{int(h):016x}"}) + "\n")


def load_hash_cache(path) -> tuple[list[str], np.ndarray]:
    ids, hashes = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or "phash_hex" not in obj:
                raise DedupError(
                    f"{path}:{lineno + 1}: expected keys id, phash_hex"
                )
            ids.append(str(obj["id"]))
            hashes.append(int(obj["phash_hex"], 16))
    return ids, np.asarray(hashes, dtype=np.uint64)
