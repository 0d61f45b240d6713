"""Synthetic paired representation spaces with controllable structure.

Each source gets a shared latent; each modality mixes [latent; unique] through
a seeded orthogonal map and adds per-coordinate Gaussian noise before row
normalization. Group multiplicities > 1 emit a flat pair dataset (all image
variant x caption variant combinations per source) sharing one group_id, the
shape real many-to-many corpora take after flattening. Outputs are a pure
function of the SynthSpec.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .store import EmbeddingSet, Manifest, ManifestRow, normalize, substream


class SynthError(ValueError):
    """Raised for invalid generator specs."""


@dataclass(frozen=True)
class SynthSpec:
    n_sources: int
    dim_a: int
    dim_b: int
    shared_dim: int
    noise_a: float = 0.0
    noise_b: float = 0.0
    classes: Optional[int] = None
    group_multiplicity_a: int = 1
    group_multiplicity_b: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_sources < 1:
            raise SynthError(f"n_sources must be >= 1, got {self.n_sources}")
        if self.dim_a < 1 or self.dim_b < 1:
            raise SynthError("dims must be >= 1")
        if not 0 <= self.shared_dim <= min(self.dim_a, self.dim_b):
            raise SynthError(
                f"shared_dim {self.shared_dim} must be in [0, "
                f"{min(self.dim_a, self.dim_b)}]"
            )
        if self.noise_a < 0 or self.noise_b < 0:
            raise SynthError("noise levels must be non-negative")
        if self.group_multiplicity_a < 1 or self.group_multiplicity_b < 1:
            raise SynthError("group multiplicities must be >= 1")
        if self.classes is not None and not 1 <= self.classes <= self.n_sources:
            raise SynthError(
                f"classes must be in [1, n_sources], got {self.classes}"
            )

    @property
    def pair_count(self) -> int:
        return (
            self.n_sources
            * self.group_multiplicity_a
            * self.group_multiplicity_b
        )


def _orthogonal(rng: np.random.Generator, dim: int) -> np.ndarray:
    mat = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(mat)
    return q * np.sign(np.diag(r))


def _modality_rows(latent, unique, rotation, noise_level, eps):
    """Per-variant rows: rotate [latent; unique], add scaled noise."""
    base = np.concatenate([latent, unique], axis=1) if unique.shape[1] else latent
    mixed = base @ rotation.T
    n, mult, dim = eps.shape
    rows = mixed[:, None, :] + noise_level * eps
    return rows.reshape(n * mult, dim)


def generate(spec: SynthSpec) -> tuple[EmbeddingSet, EmbeddingSet, Manifest]:
    """Generate (modality A EmbeddingSet, modality B EmbeddingSet, Manifest).

    The returned manifest carries the A side (modality "image"); use
    Manifest.with_modality("text") for the B-side twin. Row i of both
    embedding sets refers to the same flat pair.
    """
    n = spec.n_sources
    s = spec.shared_dim
    ma, mb = spec.group_multiplicity_a, spec.group_multiplicity_b

    z = substream(spec.seed, "synth-latent").standard_normal((n, s))
    if spec.classes is not None:
        cls_rng = substream(spec.seed, "synth-classes")
        centers = cls_rng.standard_normal((spec.classes, s))
        assignment = np.arange(n) % spec.classes
        z = centers[assignment] + 0.35 * z
    else:
        assignment = None

    u_a = substream(spec.seed, "synth-unique-a").standard_normal(
        (n, spec.dim_a - s)
    )
    u_b = substream(spec.seed, "synth-unique-b").standard_normal(
        (n, spec.dim_b - s)
    )
    rot_a = _orthogonal(substream(spec.seed, "synth-rot-a"), spec.dim_a)
    rot_b = _orthogonal(substream(spec.seed, "synth-rot-b"), spec.dim_b)
    eps_a = substream(spec.seed, "synth-noise-a").standard_normal(
        (n, ma, spec.dim_a)
    )
    eps_b = substream(spec.seed, "synth-noise-b").standard_normal(
        (n, mb, spec.dim_b)
    )

    variants_a = _modality_rows(z, u_a, rot_a, spec.noise_a, eps_a)
    variants_b = _modality_rows(z, u_b, rot_b, spec.noise_b, eps_b)

    # Flat pair dataset: every (image variant, caption variant) combination
    # of a source becomes one row; embeddings repeat across the pairs that
    # share a variant, exactly as flattened many-to-many corpora do.
    rows_a = np.repeat(
        variants_a.reshape(n, ma, spec.dim_a), mb, axis=1
    ).reshape(n * ma * mb, spec.dim_a)
    rows_b = np.tile(
        variants_b.reshape(n, 1, mb, spec.dim_b), (1, ma, 1, 1)
    ).reshape(n * ma * mb, spec.dim_b)

    manifest_rows = []
    for i in range(n):
        source = f"s{i:06d}"
        label = f"c{assignment[i]:04d}" if assignment is not None else None
        for va in range(ma):
            for vb in range(mb):
                manifest_rows.append(
                    ManifestRow(
                        id=f"{source}-a{va}-b{vb}",
                        modality="image",
                        source_id=source,
                        group_id=source,
                        class_label=label,
                    )
                )

    emb_a = normalize(EmbeddingSet(rows_a.astype(np.float32)))
    emb_b = normalize(EmbeddingSet(rows_b.astype(np.float32)))
    return emb_a, emb_b, Manifest(manifest_rows)
