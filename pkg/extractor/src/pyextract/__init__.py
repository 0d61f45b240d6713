"""Per-layer embedding extraction into the EMB1 interchange format."""

from .emb_format import write_emb, write_manifest
from .extract import ExtractError, ExtractionJob, ExtractionResult, extract

__version__ = "0.1.0"

__all__ = [
    "ExtractError",
    "ExtractionJob",
    "ExtractionResult",
    "extract",
    "write_emb",
    "write_manifest",
]
