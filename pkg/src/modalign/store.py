"""On-disk embedding format, per-sample manifest, and gallery selection.

The binary embedding file (``EMB1``) is little-endian:

    magic "EMB1" | version u32=1 | count u32 | dim u32 | layer u32 |
    dtype u8 (1 = float32) | 3 reserved zero bytes |
    payload count*dim float32, row-major

The manifest is UTF-8 JSON Lines, one object per row with keys ``id``,
``modality``, ``source_id`` and optional ``group_id``, ``class_label``;
line order defines index order.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

MAGIC = b"EMB1"
FORMAT_VERSION = 1
DTYPE_F32 = 1
_HEADER = struct.Struct("<4sIIIIB3s")

MODALITIES = ("image", "text")


class StoreError(ValueError):
    """Raised for malformed embedding files or manifests."""


@dataclass(frozen=True)
class EmbeddingSet:
    """An n x d float32 matrix of feature vectors for one model layer."""

    values: np.ndarray
    layer: int = 0
    normalized: bool = False

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise StoreError(f"expected 2-D values, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise StoreError(f"empty embedding matrix: shape {v.shape}")
        if v.dtype != np.float32:
            raise StoreError(f"values must be float32, got {v.dtype}")
        if self.layer < 0:
            raise StoreError(f"layer index must be >= 0, got {self.layer}")
        if not np.isfinite(v).all():
            bad = int(np.flatnonzero(~np.isfinite(v).all(axis=1))[0])
            raise StoreError(f"non-finite entries in row {bad}")
        if self.normalized:
            norms = np.linalg.norm(v.astype(np.float64), axis=1)
            off = np.abs(norms - 1.0)
            if off.max() > 1e-5:
                bad = int(off.argmax())
                raise StoreError(
                    f"row {bad} has norm {norms[bad]:.8f}, not unit"
                )
        v.setflags(write=False)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def take(self, indices) -> "EmbeddingSet":
        """Row subset as a new EmbeddingSet (order follows ``indices``)."""
        sub = np.ascontiguousarray(self.values[np.asarray(indices)])
        return EmbeddingSet(sub, layer=self.layer, normalized=self.normalized)


def write_embeddings(path, values: np.ndarray, layer: int = 0) -> None:
    """Write a float32 matrix in the EMB1 binary format."""
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise StoreError(f"expected 2-D values, got shape {arr.shape}")
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, arr.shape[0], arr.shape[1], layer,
        DTYPE_F32, b"\x00\x00\x00",
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes(order="C"))


def load_embeddings(path, expect_dim: Optional[int] = None) -> EmbeddingSet:
    """Load and validate an EMB1 file.

    Raises StoreError on a malformed header, dtype mismatch, truncated
    payload, or a dimension mismatch against ``expect_dim``.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise StoreError(f"{path}: malformed header (file too short)")
        magic, version, count, dim, layer, dtype, reserved = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise StoreError(f"{path}: malformed header (bad magic {magic!r})")
        if version != FORMAT_VERSION:
            raise StoreError(f"{path}: unsupported format version {version}")
        if dtype != DTYPE_F32:
            raise StoreError(f"{path}: dtype mismatch (code {dtype}, want 1)")
        if reserved != b"\x00\x00\x00":
            raise StoreError(f"{path}: malformed header (reserved bytes set)")
        if count < 1 or dim < 1:
            raise StoreError(f"{path}: malformed header (count={count}, dim={dim})")
        if expect_dim is not None and dim != expect_dim:
            raise StoreError(
                f"{path}: dimension mismatch (file dim {dim}, expected {expect_dim})"
            )
        payload = fh.read()
    expected = count * dim * 4
    if len(payload) < expected:
        raise StoreError(
            f"{path}: truncated payload ({len(payload)} bytes, expected {expected})"
        )
    if len(payload) > expected:
        raise StoreError(
            f"{path}: trailing bytes after payload ({len(payload) - expected})"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
    return EmbeddingSet(values, layer=layer, normalized=False)


def normalize(e: EmbeddingSet) -> EmbeddingSet:
    """L2-normalize every row; zero-norm rows are a hard error."""
    norms = np.linalg.norm(e.values.astype(np.float64), axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise StoreError(f"zero-norm row at index {int(zero[0])}")
    out = (e.values.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingSet(out, layer=e.layer, normalized=True)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestRow:
    id: str
    modality: str
    source_id: str
    group_id: Optional[str] = None
    class_label: Optional[str] = None


@dataclass
class Manifest:
    """Ordered per-sample metadata; row position defines index i."""

    rows: list[ManifestRow] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for i, row in enumerate(self.rows):
            if row.modality not in MODALITIES:
                raise StoreError(
                    f"row {i}: unknown modality {row.modality!r}"
                )
            if row.id in seen:
                raise StoreError(f"row {i}: duplicate id {row.id!r}")
            seen.add(row.id)

    def __len__(self) -> int:
        return len(self.rows)

    def ids(self) -> list[str]:
        return [r.id for r in self.rows]

    def source_ids(self) -> list[str]:
        return [r.source_id for r in self.rows]

    def group_ids(self) -> list[str]:
        missing = [i for i, r in enumerate(self.rows) if r.group_id is None]
        if missing:
            raise StoreError(f"row {missing[0]} has no group_id")
        return [r.group_id for r in self.rows]

    def class_labels(self) -> list[str]:
        missing = [i for i, r in enumerate(self.rows) if r.class_label is None]
        if missing:
            raise StoreError(f"row {missing[0]} has no class_label")
        return [r.class_label for r in self.rows]

    def is_bijective(self) -> bool:
        """Each source_id appears exactly once per modality."""
        seen = set()
        for r in self.rows:
            key = (r.source_id, r.modality)
            if key in seen:
                return False
            seen.add(key)
        return True

    def with_modality(self, modality: str) -> "Manifest":
        """Twin manifest for the other side of a paired dataset."""
        return Manifest([replace(r, modality=modality) for r in self.rows])

    def check_bound(self, e: EmbeddingSet, name: str = "embeddings") -> None:
        if e.count != len(self.rows):
            raise StoreError(
                f"{name}: row count {e.count} does not match manifest "
                f"length {len(self.rows)}"
            )


def check_paired(manifest_a: Manifest, manifest_b: Manifest) -> None:
    """Validate that index i refers to the same sample on both sides."""
    if len(manifest_a) != len(manifest_b):
        raise StoreError(
            f"paired manifests differ in length: {len(manifest_a)} vs "
            f"{len(manifest_b)}"
        )
    for i, (ra, rb) in enumerate(zip(manifest_a.rows, manifest_b.rows)):
        if ra.source_id != rb.source_id:
            raise StoreError(
                f"row {i}: source_id mismatch {ra.source_id!r} vs {rb.source_id!r}"
            )


def load_manifest(path) -> Manifest:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreError(f"{path}:{lineno + 1}: invalid JSON ({exc})")
            for key in ("id", "modality", "source_id"):
                if key not in obj:
                    raise StoreError(f"{path}:{lineno + 1}: missing key {key!r}")
            rows.append(
                ManifestRow(
                    id=str(obj["id"]),
                    modality=str(obj["modality"]),
                    source_id=str(obj["source_id"]),
                    group_id=(
                        None if obj.get("group_id") is None
                        else str(obj["group_id"])
                    ),
                    class_label=(
                        None if obj.get("class_label") is None
                        else str(obj["class_label"])
                    ),
                )
            )
    return Manifest(rows)


def write_manifest(path, manifest: Manifest) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in manifest.rows:
            obj = {"id": r.id, "modality": r.modality, "source_id": r.source_id}
            if r.group_id is not None:
                obj["group_id"] = r.group_id
            if r.class_label is not None:
                obj["class_label"] = r.class_label
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# seeded substreams and nested gallery selection
# ---------------------------------------------------------------------------

def substream(seed: int, name: str) -> np.random.Generator:
    """Named RNG substream derived from one user-visible 64-bit seed."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    tag = int.from_bytes(digest[:8], "little")
    return np.random.default_rng([seed & (2**64 - 1), tag])


@dataclass(frozen=True)
class GallerySelection:
    """Nested gallery index selections drawn from one seeded permutation."""

    pool_size: int
    sizes: tuple[int, ...]
    seed: int
    permutation: np.ndarray

    def indices_at(self, size: int) -> np.ndarray:
        if size not in self.sizes:
            raise StoreError(f"size {size} not in selection sizes {self.sizes}")
        return self.permutation[:size]

    @property
    def indices_per_size(self) -> dict[int, np.ndarray]:
        return {s: self.permutation[:s] for s in self.sizes}


def nested_subsample(
    pool_size: int,
    sizes: Sequence[int],
    query_indices: Iterable[int],
    seed: int,
) -> GallerySelection:
    """Draw nested gallery selections excluding the query set.

    One seeded permutation of the non-query pool is drawn; the selection at
    each size is its prefix, so selections are nested by construction and
    deterministic for a fixed seed.
    """
    sizes = tuple(int(s) for s in sizes)
    if not sizes:
        raise StoreError("sizes must be non-empty")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise StoreError(f"sizes must be strictly ascending, got {sizes}")
    if sizes[0] < 1:
        raise StoreError(f"sizes must be >= 1, got {sizes}")
    queries = np.unique(np.asarray(list(query_indices), dtype=np.int64))
    if queries.size and (queries.min() < 0 or queries.max() >= pool_size):
        raise StoreError("query indices out of pool range")
    available = pool_size - queries.size
    if sizes[-1] > available:
        raise StoreError(
            f"size exceeds pool: requested {sizes[-1]} of {available} "
            f"available (pool {pool_size} minus {queries.size} queries)"
        )
    pool = np.setdiff1d(np.arange(pool_size, dtype=np.int64), queries)
    rng = substream(seed, "gallery")
    perm = rng.permutation(pool)[: sizes[-1]]
    return GallerySelection(
        pool_size=pool_size, sizes=sizes, seed=seed, permutation=perm
    )
