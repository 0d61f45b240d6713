"""Mutual-kNN alignment, sweeps, scaling curves, and decompositions.

The alignment between two representation spaces over a shared gallery is the
mean over queries of |N_k_a(i) & N_k_b(i)| / k, where each neighbor set is
retrieved independently per space. Raw scores are reported without chance
correction; the chance level k / gallery_size is carried alongside for
context. The grouped variant substitutes group identity for item identity:
a retrieved item matches any item in the other list sharing its group, each
item usable once.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._kernels import overlap_kernel
from .knn import KnnError, NeighborList, identity_self_map, topk
from .store import EmbeddingSet, Manifest, StoreError, GallerySelection, substream


class MetricError(ValueError):
    """Raised for inconsistent metric inputs."""


@dataclass(frozen=True)
class AlignmentReport:
    """Mutual-kNN scores plus the configuration that produced them."""

    mean_score: float
    per_sample: np.ndarray
    k: int
    gallery_size: int
    config: dict = field(default_factory=dict)

    @property
    def chance_level(self) -> float:
        return self.k / self.gallery_size

    def to_dict(self, include_per_sample: bool = False) -> dict:
        out = {
            "mean_score": self.mean_score,
            "k": self.k,
            "gallery_size": self.gallery_size,
            "chance_level": self.chance_level,
            "config": self.config,
        }
        if include_per_sample:
            out["per_sample"] = [float(s) for s in self.per_sample]
        return out

    def to_json(self, path, include_per_sample: bool = False) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(include_per_sample), fh, sort_keys=True,
                      indent=2)
            fh.write("\n")


def mutual_knn(
    neigh_a: NeighborList, neigh_b: NeighborList, config: Optional[dict] = None
) -> AlignmentReport:
    """Raw mutual-kNN alignment of two neighbor lists over one gallery."""
    if neigh_a.k != neigh_b.k:
        raise MetricError(f"mismatched k: {neigh_a.k} vs {neigh_b.k}")
    if neigh_a.query_count != neigh_b.query_count:
        raise MetricError(
            f"mismatched query count: {neigh_a.query_count} vs "
            f"{neigh_b.query_count}"
        )
    if neigh_a.gallery_count != neigh_b.gallery_count:
        raise MetricError(
            f"neighbor lists come from different galleries: "
            f"{neigh_a.gallery_count} vs {neigh_b.gallery_count}"
        )
    overlap = overlap_kernel(neigh_a.indices, neigh_b.indices)
    per_sample = overlap.astype(np.float64) / neigh_a.k
    return AlignmentReport(
        mean_score=float(per_sample.mean()),
        per_sample=per_sample,
        k=neigh_a.k,
        gallery_size=neigh_a.gallery_count,
        config=dict(config or {}),
    )


def grouped_mutual_knn(
    neigh_a: NeighborList,
    neigh_b: NeighborList,
    gallery_group_ids: Sequence[str],
    config: Optional[dict] = None,
) -> AlignmentReport:
    """Mutual-kNN where retrieved items match by shared group identity.

    Items are matched greedily one-to-one on group ids, so the per-sample
    score stays in [0, 1] and reduces exactly to the raw metric when every
    group is a singleton.
    """
    if neigh_a.k != neigh_b.k or neigh_a.query_count != neigh_b.query_count:
        raise MetricError("neighbor lists disagree in shape")
    if neigh_a.gallery_count != neigh_b.gallery_count:
        raise MetricError("neighbor lists come from different galleries")
    groups = list(gallery_group_ids)
    if len(groups) != neigh_a.gallery_count:
        raise MetricError(
            f"got {len(groups)} group ids for a gallery of "
            f"{neigh_a.gallery_count}"
        )
    if any(g is None for g in groups):
        raise MetricError("missing group ids in gallery")
    _, codes = np.unique(np.asarray(groups, dtype=object), return_inverse=True)
    codes = codes.astype(np.int64)
    ga = codes[neigh_a.indices]
    gb = codes[neigh_b.indices]
    overlap = overlap_kernel(ga, gb)
    per_sample = overlap.astype(np.float64) / neigh_a.k
    return AlignmentReport(
        mean_score=float(per_sample.mean()),
        per_sample=per_sample,
        k=neigh_a.k,
        gallery_size=neigh_a.gallery_count,
        config=dict(config or {}),
    )


# ---------------------------------------------------------------------------
# sweeps over k and gallery size
# ---------------------------------------------------------------------------

def _check_pair(feat_a: EmbeddingSet, feat_b: EmbeddingSet) -> None:
    if feat_a.count != feat_b.count:
        raise MetricError(
            f"paired sets differ in row count: {feat_a.count} vs {feat_b.count}"
        )
    if not (feat_a.normalized and feat_b.normalized):
        raise MetricError("both embedding sets must be normalized")


def k_sweep(
    feat_a: EmbeddingSet,
    feat_b: EmbeddingSet,
    gallery: Sequence[int],
    ks: Sequence[int],
    config: Optional[dict] = None,
) -> list[AlignmentReport]:
    """Mutual-kNN at several k over a shared query/gallery set.

    The gallery rows double as queries with self-exclusion, so at
    k = gallery_size - 1 both neighbor sets contain everything but the
    query itself and the mean is exactly 1.0.
    """
    _check_pair(feat_a, feat_b)
    ks = [int(k) for k in ks]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise MetricError(f"ks must be strictly ascending, got {ks}")
    idx = np.asarray(gallery, dtype=np.int64)
    n = idx.size
    if ks[-1] > n - 1:
        raise MetricError(
            f"max k {ks[-1]} exceeds gallery size minus one ({n - 1})"
        )
    sub_a = feat_a.take(idx)
    sub_b = feat_b.take(idx)
    self_map = identity_self_map(n)
    kmax = ks[-1]
    neigh_a = topk(sub_a, sub_a, kmax, self_map=self_map)
    neigh_b = topk(sub_b, sub_b, kmax, self_map=self_map)
    reports = []
    for k in ks:
        cfg = dict(config or {})
        cfg.update({"k": k, "gallery_size": int(n), "self_excluded": True})
        reports.append(mutual_knn(neigh_a.head(k), neigh_b.head(k), cfg))
    return reports


def scale_curve(
    feat_a: EmbeddingSet,
    feat_b: EmbeddingSet,
    queries: Sequence[int],
    selection: GallerySelection,
    ks: Sequence[int],
    config: Optional[dict] = None,
) -> list[dict]:
    """Mutual-kNN means over nested galleries with a fixed query set.

    Returns one row per (gallery_size, k): {"gallery_size", "k",
    "mean_score", "chance_level"}.
    """
    _check_pair(feat_a, feat_b)
    q_idx = np.asarray(queries, dtype=np.int64)
    ks = sorted(int(k) for k in ks)
    if np.intersect1d(q_idx, selection.permutation).size:
        raise MetricError("gallery selection overlaps the query set")
    qa = feat_a.take(q_idx)
    qb = feat_b.take(q_idx)
    rows = []
    for size in selection.sizes:
        g_idx = selection.indices_at(size)
        if ks[-1] > size:
            raise MetricError(f"k={ks[-1]} exceeds gallery size {size}")
        ga = feat_a.take(g_idx)
        gb = feat_b.take(g_idx)
        neigh_a = topk(qa, ga, ks[-1])
        neigh_b = topk(qb, gb, ks[-1])
        for k in ks:
            rep = mutual_knn(neigh_a.head(k), neigh_b.head(k), config)
            rows.append(
                {
                    "gallery_size": int(size),
                    "k": int(k),
                    "mean_score": rep.mean_score,
                    "chance_level": rep.chance_level,
                }
            )
    return rows


def curve_to_csv(path, rows: list[dict], config: Optional[dict] = None) -> None:
    """Write sweep rows as a plot-ready CSV."""
    fields = ["gallery_size", "k", "mean_score", "chance_level"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({f: row[f] for f in fields})


def best_layer_pair(
    layers_a: Sequence[EmbeddingSet],
    layers_b: Sequence[EmbeddingSet],
    probe: Sequence[int],
    k: int,
) -> tuple[int, int, float]:
    """Exhaustive layer-pair sweep maximizing mutual-kNN on a probe subset.

    Ties break toward the earlier (layer_a, layer_b) pair.
    """
    if not layers_a or not layers_b:
        raise MetricError("layer lists must be non-empty")
    probe = np.asarray(probe, dtype=np.int64)
    n = probe.size
    self_map = identity_self_map(n)
    neigh_a = [
        topk(e.take(probe), e.take(probe), k, self_map=self_map)
        for e in layers_a
    ]
    neigh_b = [
        topk(e.take(probe), e.take(probe), k, self_map=self_map)
        for e in layers_b
    ]
    best = None
    for ia, na in enumerate(neigh_a):
        for ib, nb in enumerate(neigh_b):
            score = mutual_knn(na, nb).mean_score
            if best is None or score > best[2]:
                best = (ia, ib, score)
    return best


# ---------------------------------------------------------------------------
# labeled decomposition: class-level vs instance-level agreement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionReport:
    """Class-level retrieval rates vs strict same-item agreement."""

    acc_a: float
    acc_b: float
    joint_correct: float
    strict_agreement: float
    ipc: int
    k: int
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.joint_correct > min(self.acc_a, self.acc_b) + 1e-12:
            raise MetricError(
                "joint_correct exceeds min(acc_a, acc_b); internal error"
            )

    def to_dict(self) -> dict:
        return {
            "acc_a": self.acc_a,
            "acc_b": self.acc_b,
            "joint_correct": self.joint_correct,
            "strict_agreement": self.strict_agreement,
            "ipc": self.ipc,
            "k": self.k,
            "config": self.config,
        }


def sample_class_split(
    labels: Sequence[str], ipc: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded (queries, gallery) split: one query per class, ipc gallery
    items per class drawn from the rest.

    The per-class gallery draw is a prefix of one seeded permutation, so
    galleries are nested across increasing ipc for a fixed seed.
    """
    labels = np.asarray(labels, dtype=object)
    classes = sorted(set(labels.tolist()))
    q_rng = substream(seed, "decompose-queries")
    g_rng = substream(seed, "decompose-gallery")
    queries = []
    gallery = []
    for cls in classes:
        members = np.flatnonzero(labels == cls)
        if members.size < ipc + 1:
            raise MetricError(
                f"class {cls!r} has {members.size} members; needs at least "
                f"{ipc + 1} (1 query + ipc={ipc} gallery items)"
            )
        members = members[q_rng.permutation(members.size)]
        queries.append(members[0])
        rest = members[1:]
        rest = rest[g_rng.permutation(rest.size)]
        gallery.append(rest[:ipc])
    return (
        np.asarray(queries, dtype=np.int64),
        np.concatenate(gallery).astype(np.int64),
    )


def decompose(
    feat_a: EmbeddingSet,
    feat_b: EmbeddingSet,
    manifest: Manifest,
    ipc: int,
    k: int,
    seed: int,
    config: Optional[dict] = None,
) -> DecompositionReport:
    """Split agreement into per-model correct-class retrieval, joint
    correct-class retrieval, and strict same-item mutual-kNN agreement.

    The gallery holds a seeded sample of ipc items per class (queries
    excluded); correctness is hit@k: any of the top-k in the query's class.
    """
    _check_pair(feat_a, feat_b)
    manifest.check_bound(feat_a, "feat_a")
    labels = manifest.class_labels()
    if ipc < 1:
        raise MetricError(f"ipc must be >= 1, got {ipc}")
    q_idx, g_idx = sample_class_split(labels, ipc, seed)
    if k > g_idx.size:
        raise MetricError(f"k={k} exceeds gallery size {g_idx.size}")
    qa, qb = feat_a.take(q_idx), feat_b.take(q_idx)
    ga, gb = feat_a.take(g_idx), feat_b.take(g_idx)
    neigh_a = topk(qa, ga, k)
    neigh_b = topk(qb, gb, k)

    labels_arr = np.asarray(labels, dtype=object)
    _, codes = np.unique(labels_arr, return_inverse=True)
    codes = codes.astype(np.int64)
    q_cls = codes[q_idx]
    g_cls = codes[g_idx]
    hit_a = (g_cls[neigh_a.indices] == q_cls[:, None]).any(axis=1)
    hit_b = (g_cls[neigh_b.indices] == q_cls[:, None]).any(axis=1)
    strict = mutual_knn(neigh_a, neigh_b)
    return DecompositionReport(
        acc_a=float(hit_a.mean()),
        acc_b=float(hit_b.mean()),
        joint_correct=float((hit_a & hit_b).mean()),
        strict_agreement=strict.mean_score,
        ipc=ipc,
        k=k,
        config=dict(config or {}),
    )
