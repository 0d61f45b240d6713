"""Run a pretrained encoder over a corpus and dump per-layer embeddings.

Vision jobs take the CLS token of every requested transformer layer; text
jobs average hidden states over non-padding tokens. Layer 0 is the embedding
layer output, layers 1..L the transformer blocks. Unreadable or empty
samples are skipped in both the embedding files and the manifest, keeping
indices aligned, and recorded in the sidecar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import torch

from .emb_format import write_emb, write_manifest


class ExtractError(RuntimeError):
    """Raised when a job cannot run at all (bad model, bad config)."""


MODALITIES = ("image", "text")
POOLINGS = ("cls_token", "mean_nonpad")


@dataclass
class ExtractionJob:
    model_name: str
    modality: str
    corpus: str
    out_dir: str
    layer_indices: Union[str, Sequence[int]] = "all"
    pooling: Optional[str] = None
    batch_size: int = 8
    max_length: Optional[int] = None
    device: str = "cpu"

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ExtractError(f"unknown modality {self.modality!r}")
        if self.pooling is None:
            self.pooling = "cls_token" if self.modality == "image" \
                else "mean_nonpad"
        if self.pooling not in POOLINGS:
            raise ExtractError(f"unknown pooling {self.pooling!r}")
        if self.batch_size < 1:
            raise ExtractError("batch_size must be >= 1")


@dataclass
class ExtractionResult:
    layer_files: dict[int, Path]
    manifest_file: Path
    sidecar_file: Path
    row_ids: list[str]
    skipped: list[dict] = field(default_factory=list)


def _load_corpus(path, modality):
    key = "image" if modality == "image" else "caption"
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or key not in obj:
                raise ExtractError(
                    f"{path}:{lineno + 1}: expected keys id, {key}")
            rows.append({
                "id": str(obj["id"]),
                "payload": obj[key],
                "source_id": str(obj.get("source_id", obj["id"])),
            })
    if not rows:
        raise ExtractError(f"{path}: empty corpus")
    return rows


def _resolve_layers(spec, n_layers):
    if spec == "all":
        return list(range(n_layers))
    layers = sorted(int(x) for x in spec)
    for layer in layers:
        if not 0 <= layer < n_layers:
            raise ExtractError(
                f"layer {layer} out of range; model exposes 0..{n_layers - 1}"
            )
    return layers


def _pool(hidden, mask, pooling):
    if pooling == "cls_token":
        return hidden[:, 0, :]
    denom = mask.sum(dim=1, keepdim=True).clamp(min=1)
    return (hidden * mask.unsqueeze(-1)).sum(dim=1) / denom


class _VisionFrontend:
    def __init__(self, job, model):
        from PIL import Image

        self._image_cls = Image
        self.description = None
        self.processor = None
        try:
            from transformers import AutoImageProcessor

            self.processor = AutoImageProcessor.from_pretrained(
                job.model_name)
            self.description = f"AutoImageProcessor({type(self.processor).__name__})"
        except Exception:
            size = getattr(model.config, "image_size", 224)
            self.size = size
            self.description = (
                f"fallback: bilinear resize to {size}x{size}, scale 1/255, "
                "normalize mean 0.5 std 0.5"
            )

    def decode(self, path):
        from PIL import Image, UnidentifiedImageError

        try:
            with Image.open(path) as img:
                return img.convert("RGB")
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            raise ValueError(f"undecodable image {path}: {exc}")

    def batch(self, images):
        if self.processor is not None:
            out = self.processor(images=images, return_tensors="pt")
            return out["pixel_values"]
        tensors = []
        for img in images:
            resized = img.resize((self.size, self.size),
                                 self._image_cls.Resampling.BILINEAR)
            arr = np.asarray(resized, dtype=np.float32) / 255.0
            arr = (arr - 0.5) / 0.5
            tensors.append(torch.from_numpy(arr).permute(2, 0, 1))
        return torch.stack(tensors)


class _TextFrontend:
    def __init__(self, job, model):
        from transformers import AutoTokenizer

        self.tokenizer = AutoTokenizer.from_pretrained(job.model_name)
        if self.tokenizer.pad_token is None:
            self.tokenizer.pad_token = self.tokenizer.eos_token
        max_length = job.max_length
        if max_length is None:
            candidate = getattr(self.tokenizer, "model_max_length", None)
            if candidate is not None and candidate < 10**6:
                max_length = int(candidate)
            else:
                max_length = getattr(model.config,
                                     "max_position_embeddings", None)
        self.max_length = max_length
        self.description = (
            f"tokenizer={type(self.tokenizer).__name__}, "
            f"truncation max_length={self.max_length}"
        )

    def batch(self, texts):
        return self.tokenizer(
            texts,
            padding=True,
            truncation=self.max_length is not None,
            max_length=self.max_length,
            return_tensors="pt",
        )


def extract(job: ExtractionJob) -> ExtractionResult:
    """Run the job; returns the written files and the skip record."""
    from transformers import AutoModel

    try:
        model = AutoModel.from_pretrained(job.model_name)
    except Exception as exc:
        raise ExtractError(f"cannot load model {job.model_name!r}: {exc}")
    model.eval()
    device = torch.device(job.device)
    model.to(device)

    rows = _load_corpus(job.corpus, job.modality)
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    skipped = []
    valid = []
    frontend = (_VisionFrontend(job, model) if job.modality == "image"
                else _TextFrontend(job, model))
    if job.modality == "image":
        for row in rows:
            try:
                row["decoded"] = frontend.decode(row["payload"])
                valid.append(row)
            except ValueError as exc:
                skipped.append({"id": row["id"], "reason": str(exc)})
    else:
        for row in rows:
            text = str(row["payload"])
            if not text.strip():
                skipped.append({"id": row["id"],
                                "reason": "empty caption (no tokens)"})
                continue
            row["decoded"] = text
            valid.append(row)
    if not valid:
        raise ExtractError("no readable samples in corpus")

    per_layer: dict[int, list[np.ndarray]] = {}
    layers = None
    kept_rows = []
    with torch.no_grad():
        for lo in range(0, len(valid), job.batch_size):
            batch_rows = valid[lo:lo + job.batch_size]
            if job.modality == "image":
                pixel_values = frontend.batch(
                    [r["decoded"] for r in batch_rows]).to(device)
                outputs = model(pixel_values=pixel_values,
                                output_hidden_states=True)
                mask = torch.ones(
                    outputs.hidden_states[0].shape[:2], device=device)
                keep = list(range(len(batch_rows)))
            else:
                encoded = frontend.batch([r["decoded"] for r in batch_rows])
                mask = encoded["attention_mask"]
                keep = [i for i in range(len(batch_rows))
                        if int(mask[i].sum()) > 0]
                for i in range(len(batch_rows)):
                    if i not in keep:
                        skipped.append({
                            "id": batch_rows[i]["id"],
                            "reason": "all padding after truncation",
                        })
                if not keep:
                    continue
                encoded = {k: v[keep].to(device) for k, v in encoded.items()}
                mask = encoded["attention_mask"]
                outputs = model(**encoded, output_hidden_states=True)
            hidden_states = outputs.hidden_states
            if layers is None:
                layers = _resolve_layers(job.layer_indices,
                                         len(hidden_states))
                per_layer = {layer: [] for layer in layers}
            for layer in layers:
                pooled = _pool(hidden_states[layer], mask.to(torch.float32),
                               job.pooling)
                per_layer[layer].append(
                    pooled.cpu().to(torch.float32).numpy())
            kept_rows.extend(batch_rows[i] for i in keep)

    if not kept_rows:
        raise ExtractError("every sample was skipped")

    row_ids = [r["id"] for r in kept_rows]
    layer_files = {}
    for layer in layers:
        matrix = np.concatenate(per_layer[layer], axis=0)
        path = out_dir / f"layer{layer:02d}.emb"
        write_emb(path, matrix, layer=layer)
        layer_files[layer] = path

    manifest_file = out_dir / "manifest.jsonl"
    write_manifest(manifest_file, [
        {"id": r["id"], "modality": job.modality, "source_id": r["source_id"]}
        for r in kept_rows
    ])

    sidecar_file = out_dir / "extraction.json"
    revision = getattr(model.config, "_commit_hash", None) or "local"
    sidecar = {
        "model_name": job.model_name,
        "model_type": type(model).__name__,
        "revision": revision,
        "modality": job.modality,
        "pooling": job.pooling,
        "layers": layers,
        "hidden_size": int(model.config.hidden_size),
        "batch_size": job.batch_size,
        "preprocessing": frontend.description,
        "row_ids": row_ids,
        "skipped": skipped,
        "row_count": len(row_ids),
    }
    with open(sidecar_file, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")

    return ExtractionResult(
        layer_files=layer_files,
        manifest_file=manifest_file,
        sidecar_file=sidecar_file,
        row_ids=row_ids,
        skipped=skipped,
    )
