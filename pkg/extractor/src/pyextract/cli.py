"""Command-line wrapper around the extraction job."""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractError, ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyextract",
        description="Dump per-layer embeddings in the EMB1 format",
    )
    parser.add_argument("--model", required=True,
                        help="model name or local path (AutoModel)")
    parser.add_argument("--modality", required=True,
                        choices=("image", "text"))
    parser.add_argument("--corpus", required=True,
                        help="JSONL rows {id, caption} or {id, image}")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--layers", default="all",
                        help='"all" or comma-separated layer indices '
                             "(0 = embedding layer)")
    parser.add_argument("--pooling", choices=("cls_token", "mean_nonpad"),
                        help="default: cls_token for images, mean_nonpad "
                             "for text")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--max-length", type=int,
                        help="token truncation length (default: model max)")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    layers = args.layers
    if layers != "all":
        layers = [int(tok) for tok in layers.split(",") if tok.strip()]
    job = ExtractionJob(
        model_name=args.model,
        modality=args.modality,
        corpus=args.corpus,
        out_dir=args.out_dir,
        layer_indices=layers,
        pooling=args.pooling,
        batch_size=args.batch_size,
        max_length=args.max_length,
        device=args.device,
    )
    try:
        result = extract(job)
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for skip in result.skipped:
        print(f"skipped {skip['id']}: {skip['reason']}", file=sys.stderr)
    print(f"wrote {len(result.layer_files)} layer file(s), "
          f"{len(result.row_ids)} rows -> {result.manifest_file.parent}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
