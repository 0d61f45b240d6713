"""Cross-modal representational alignment measurement at gallery scale."""

from .backend import numba_enabled, set_numba, set_threads
from .dedup import (
    DedupResult,
    GroupDataset,
    build_groups,
    dedup_gallery,
    find_near_duplicates,
    hamming,
    phash,
    phash_file,
)
from .knn import NeighborList, identity_self_map, topk, topk_blocked_scaling
from .metrics import (
    AlignmentReport,
    DecompositionReport,
    best_layer_pair,
    decompose,
    grouped_mutual_knn,
    k_sweep,
    mutual_knn,
    scale_curve,
)
from .store import (
    EmbeddingSet,
    GallerySelection,
    Manifest,
    ManifestRow,
    load_embeddings,
    load_manifest,
    nested_subsample,
    normalize,
    substream,
    write_embeddings,
    write_manifest,
)
from .synth import SynthSpec, generate
from .trend import ModelPoint, TrendReport, fit_trend, generalized_r2, trend_table

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "DecompositionReport",
    "DedupResult",
    "EmbeddingSet",
    "GallerySelection",
    "GroupDataset",
    "Manifest",
    "ManifestRow",
    "ModelPoint",
    "NeighborList",
    "SynthSpec",
    "TrendReport",
    "best_layer_pair",
    "build_groups",
    "decompose",
    "dedup_gallery",
    "find_near_duplicates",
    "fit_trend",
    "generalized_r2",
    "generate",
    "grouped_mutual_knn",
    "hamming",
    "identity_self_map",
    "k_sweep",
    "load_embeddings",
    "load_manifest",
    "mutual_knn",
    "nested_subsample",
    "normalize",
    "numba_enabled",
    "phash",
    "phash_file",
    "scale_curve",
    "set_numba",
    "set_threads",
    "substream",
    "topk",
    "topk_blocked_scaling",
    "trend_table",
    "write_embeddings",
    "write_manifest",
]
