"""Writer for the EMB1 binary embedding format.

Independent implementation of the interchange contract (little-endian):

    magic "EMB1" | version u32=1 | count u32 | dim u32 | layer u32 |
    dtype u8 (1 = float32) | 3 reserved zero bytes |
    payload count*dim float32, row-major
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"EMB1"
VERSION = 1
DTYPE_F32 = 1
_HEADER = struct.Struct("<4sIIIIB3s")


def write_emb(path, values: np.ndarray, layer: int = 0) -> None:
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("refusing to write non-finite embeddings")
    header = _HEADER.pack(MAGIC, VERSION, arr.shape[0], arr.shape[1],
                          layer, DTYPE_F32, b"\x00\x00\x00")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes(order="C"))


def write_manifest(path, rows: list[dict]) -> None:
    """JSONL manifest rows {id, modality, source_id}; order = index."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
