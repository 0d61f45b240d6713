"""Command-line front-end wiring the toolkit into experiment protocols.

Subcommands: align, scale-curve, decompose, dedup, trend, synth, report.
Global flags: --seed, --threads, --out-dir, --config. Flag precedence is
CLI > config file > defaults, and the merged config (plus toolkit version)
is echoed into every JSON report. All randomness flows from the one seed
through named substreams, so a run is reproducible from its config echo.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .backend import set_threads
from .dedup import (
    DedupError,
    build_groups,
    dedup_gallery,
    load_hash_cache,
    phash_file,
    write_hash_cache,
)
from .knn import KnnError, identity_self_map, topk
from .metrics import (
    MetricError,
    best_layer_pair,
    curve_to_csv,
    decompose,
    mutual_knn,
    scale_curve,
)
from .store import (
    StoreError,
    load_embeddings,
    load_manifest,
    nested_subsample,
    normalize,
    substream,
    write_embeddings,
    write_manifest,
)
from .synth import SynthError, SynthSpec, generate
from .trend import (
    TrendError,
    load_scores_csv,
    trend_table,
    write_table_csv,
    write_table_json,
)

TIDY_HEADER = ["experiment", "pair", "gallery_size", "k", "metric", "value"]

_ERRORS = (StoreError, KnnError, MetricError, DedupError, TrendError,
           SynthError)


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in str(text).split(",") if tok.strip()]


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """CLI flags > config file section > defaults."""
    merged = dict(defaults)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "func") and v is not None}
    config_path = overrides.pop("config", None)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        section = file_cfg.get(args.command, file_cfg)
        if not isinstance(section, dict):
            raise StoreError(f"{config_path}: config section must be an object")
        for key, value in section.items():
            key = key.replace("-", "_")
            if key in merged:
                merged[key] = value
    merged.update(overrides)
    for key in ("ks", "sizes", "ipc"):
        if key in merged and isinstance(merged[key], str):
            merged[key] = _int_list(merged[key])
    return merged


def _echo(cfg: dict) -> dict:
    """Experiment config echoed into reports.

    Execution details that cannot change results (thread cap, output
    directory) are excluded so reruns produce byte-identical reports.
    """
    safe = {}
    for key, value in sorted(cfg.items()):
        if key in ("threads", "out_dir"):
            continue
        if isinstance(value, Path):
            value = str(value)
        safe[key] = value
    return {"toolkit_version": __version__, "config": safe}


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_tidy(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TIDY_HEADER)
        writer.writeheader()
        writer.writerows(rows)


def _tidy_row(experiment, pair, gallery_size, k, metric, value) -> dict:
    return {
        "experiment": experiment,
        "pair": pair,
        "gallery_size": gallery_size,
        "k": k,
        "metric": metric,
        "value": value,
    }


def _load_normalized(path, expect_dim=None):
    return normalize(load_embeddings(path, expect_dim=expect_dim))


def _load_pair_manifests(cfg, count_a, count_b):
    manifest_a = manifest_b = None
    if cfg.get("manifest_a"):
        manifest_a = load_manifest(cfg["manifest_a"])
        if len(manifest_a) != count_a:
            raise StoreError(
                f"{cfg['manifest_a']}: {len(manifest_a)} rows but embedding "
                f"file {cfg['emb_a']} has {count_a}"
            )
    if cfg.get("manifest_b"):
        manifest_b = load_manifest(cfg["manifest_b"])
        if len(manifest_b) != count_b:
            raise StoreError(
                f"{cfg['manifest_b']}: {len(manifest_b)} rows but embedding "
                f"file {cfg['emb_b']} has {count_b}"
            )
    if manifest_a and manifest_b and len(manifest_a) != len(manifest_b):
        raise StoreError(
            f"manifest length mismatch: {cfg['manifest_a']} has "
            f"{len(manifest_a)} rows, {cfg['manifest_b']} has {len(manifest_b)}"
        )
    return manifest_a, manifest_b


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_align(args) -> int:
    defaults = {
        "emb_a": None, "emb_b": None, "manifest_a": None, "manifest_b": None,
        "ks": [1, 10], "probe_size": 1024, "seed": 0, "out_dir": ".",
        "per_sample": False, "dump_neighbors": False,
    }
    cfg = _merge_config(args, defaults)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    files_a = cfg["emb_a"] if isinstance(cfg["emb_a"], list) else [cfg["emb_a"]]
    files_b = cfg["emb_b"] if isinstance(cfg["emb_b"], list) else [cfg["emb_b"]]
    layers_a = [_load_normalized(p) for p in files_a]
    layers_b = [_load_normalized(p) for p in files_b]
    counts = {e.count for e in layers_a} | {e.count for e in layers_b}
    if len(counts) != 1:
        raise StoreError(
            f"embedding files disagree on row count: {sorted(counts)}"
        )
    n = counts.pop()
    cfg["emb_a"], cfg["emb_b"] = [str(p) for p in files_a], [str(p) for p in files_b]
    _load_pair_manifests(
        {**cfg, "emb_a": files_a[0], "emb_b": files_b[0]}, n, n
    )

    ks = sorted(cfg["ks"])
    if len(layers_a) > 1 or len(layers_b) > 1:
        probe_size = min(int(cfg["probe_size"]), n)
        if probe_size < n:
            probe = np.sort(
                substream(cfg["seed"], "probe").choice(n, probe_size,
                                                       replace=False)
            )
        else:
            probe = np.arange(n)
        la, lb, probe_score = best_layer_pair(
            layers_a, layers_b, probe, k=min(ks[-1], probe.size - 1)
        )
        cfg["chosen_layer_a"], cfg["chosen_layer_b"] = int(la), int(lb)
        cfg["probe_score"] = probe_score
    else:
        la, lb = 0, 0
    feat_a, feat_b = layers_a[la], layers_b[lb]

    self_map = identity_self_map(n)
    kmax = ks[-1]
    if kmax > n - 1:
        raise KnnError(f"max k {kmax} exceeds gallery size minus one ({n - 1})")
    neigh_a = topk(feat_a, feat_a, kmax, self_map=self_map)
    neigh_b = topk(feat_b, feat_b, kmax, self_map=self_map)
    pair = f"{Path(files_a[la]).stem}|{Path(files_b[lb]).stem}"

    reports = []
    tidy = []
    for k in ks:
        rep = mutual_knn(neigh_a.head(k), neigh_b.head(k))
        reports.append(
            {"k": k, "gallery_size": n, "mean_score": rep.mean_score,
             "chance_level": rep.chance_level,
             **({"per_sample": rep.per_sample.tolist()}
                if cfg["per_sample"] else {})}
        )
        tidy.append(_tidy_row("align", pair, n, k, "mutual_knn",
                              rep.mean_score))
        tidy.append(_tidy_row("align", pair, n, k, "chance_level",
                              rep.chance_level))
    if cfg["dump_neighbors"]:
        neigh_a.to_jsonl(out_dir / "neighbors_a.jsonl")
        neigh_b.to_jsonl(out_dir / "neighbors_b.jsonl")
    _write_json(out_dir / "align.json", {**_echo(cfg), "reports": reports})
    _write_tidy(out_dir / "curves.csv", tidy)
    return 0


def cmd_scale_curve(args) -> int:
    defaults = {
        "emb_a": None, "emb_b": None, "manifest_a": None, "manifest_b": None,
        "sizes": None, "ks": [1, 10], "query_count": 256, "queries_file": None,
        "seed": 0, "out_dir": ".",
    }
    cfg = _merge_config(args, defaults)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    feat_a = _load_normalized(cfg["emb_a"])
    feat_b = _load_normalized(cfg["emb_b"], expect_dim=None)
    if feat_a.count != feat_b.count:
        raise StoreError(
            f"{cfg['emb_a']} has {feat_a.count} rows but {cfg['emb_b']} "
            f"has {feat_b.count}"
        )
    _load_pair_manifests(cfg, feat_a.count, feat_b.count)
    n = feat_a.count
    if cfg["queries_file"]:
        with open(cfg["queries_file"], "r", encoding="utf-8") as fh:
            queries = np.asarray(
                [int(line) for line in fh if line.strip()], dtype=np.int64
            )
    else:
        q = int(cfg["query_count"])
        if q >= n:
            raise StoreError(
                f"query count {q} leaves no gallery pool of {n} rows"
            )
        queries = np.sort(
            substream(cfg["seed"], "queries").choice(n, q, replace=False)
        )
    sizes = sorted(cfg["sizes"] or [])
    if not sizes:
        raise StoreError("no gallery sizes given (--sizes)")
    selection = nested_subsample(n, sizes, queries, cfg["seed"])
    rows = scale_curve(feat_a, feat_b, queries, selection, cfg["ks"])
    pair = f"{Path(cfg['emb_a']).stem}|{Path(cfg['emb_b']).stem}"
    tidy = []
    for row in rows:
        tidy.append(_tidy_row("scale-curve", pair, row["gallery_size"],
                              row["k"], "mutual_knn", row["mean_score"]))
        tidy.append(_tidy_row("scale-curve", pair, row["gallery_size"],
                              row["k"], "chance_level", row["chance_level"]))
    curve_to_csv(out_dir / "scale_curve.csv", rows)
    _write_tidy(out_dir / "curves.csv", tidy)
    _write_json(out_dir / "scale_curve.json", {**_echo(cfg), "rows": rows})
    return 0


def cmd_decompose(args) -> int:
    defaults = {
        "emb_a": None, "emb_b": None, "manifest": None,
        "ipc": [1], "ks": [1], "seed": 0, "out_dir": ".",
    }
    cfg = _merge_config(args, defaults)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    feat_a = _load_normalized(cfg["emb_a"])
    feat_b = _load_normalized(cfg["emb_b"])
    manifest = load_manifest(cfg["manifest"])
    manifest.check_bound(feat_a, str(cfg["emb_a"]))
    manifest.check_bound(feat_b, str(cfg["emb_b"]))
    pair = f"{Path(cfg['emb_a']).stem}|{Path(cfg['emb_b']).stem}"

    results = []
    tidy = []
    for ipc in sorted(cfg["ipc"]):
        for k in sorted(cfg["ks"]):
            rep = decompose(feat_a, feat_b, manifest, ipc=int(ipc), k=int(k),
                            seed=cfg["seed"])
            gallery_size = rep.ipc * len(set(manifest.class_labels()))
            results.append({**rep.to_dict(), "gallery_size": gallery_size})
            for metric, value in (
                ("acc_a", rep.acc_a), ("acc_b", rep.acc_b),
                ("joint_correct", rep.joint_correct),
                ("strict_agreement", rep.strict_agreement),
                ("ipc", float(rep.ipc)),
            ):
                tidy.append(_tidy_row("decompose", pair, gallery_size, k,
                                      metric, value))
    with open(out_dir / "decompose.csv", "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ipc", "k", "gallery_size", "acc_a", "acc_b",
                         "joint_correct", "strict_agreement"])
        for r in results:
            writer.writerow([r["ipc"], r["k"], r["gallery_size"], r["acc_a"],
                             r["acc_b"], r["joint_correct"],
                             r["strict_agreement"]])
    _write_tidy(out_dir / "curves.csv", tidy)
    _write_json(out_dir / "decompose.json", {**_echo(cfg), "rows": results})
    return 0


def _load_corpus(path):
    """JSONL corpus rows {id, caption, image?}; order defines index."""
    ids, captions, images = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or "caption" not in obj:
                raise DedupError(
                    f"{path}:{lineno + 1}: expected keys id, caption"
                )
            ids.append(str(obj["id"]))
            captions.append(str(obj["caption"]))
            images.append(obj.get("image"))
    return ids, captions, images


def _corpus_hashes(ids, images, cache_path, label):
    """Hashes per corpus row, from a cache or by decoding image files.

    Returns (hashes, undecodable_ids, valid_mask).
    """
    n = len(ids)
    if cache_path:
        cache_ids, cache_hashes = load_hash_cache(cache_path)
        lookup = dict(zip(cache_ids, cache_hashes.tolist()))
        missing = [i for i in ids if i not in lookup]
        if missing:
            raise DedupError(
                f"{label}: hash cache {cache_path} is missing ids "
                f"{missing[:5]}{'...' if len(missing) > 5 else ''}"
            )
        return (
            np.asarray([lookup[i] for i in ids], dtype=np.uint64),
            [],
            np.ones(n, dtype=bool),
        )
    hashes = np.zeros(n, dtype=np.uint64)
    valid = np.ones(n, dtype=bool)
    undecodable = []
    for i, (sid, img) in enumerate(zip(ids, images)):
        if img is None:
            raise DedupError(
                f"{label}: row {sid!r} has no image path and no hash cache "
                "was given"
            )
        try:
            hashes[i] = phash_file(img)
        except DedupError as exc:
            print(f"warning: {exc}", file=sys.stderr)
            undecodable.append(sid)
            valid[i] = False
    return hashes, undecodable, valid


def cmd_dedup(args) -> int:
    defaults = {
        "gallery": None, "queries": None, "gallery_hash_cache": None,
        "queries_hash_cache": None, "threshold": 2,
        "write_hash_cache": None, "out_dir": ".", "seed": 0,
    }
    cfg = _merge_config(args, defaults)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    g_ids, g_caps, g_imgs = _load_corpus(cfg["gallery"])
    q_ids, q_caps, q_imgs = _load_corpus(cfg["queries"])
    g_hashes, g_bad, g_valid = _corpus_hashes(
        g_ids, g_imgs, cfg["gallery_hash_cache"], "gallery")
    q_hashes, q_bad, q_valid = _corpus_hashes(
        q_ids, q_imgs, cfg["queries_hash_cache"], "queries")

    g_rows = np.flatnonzero(g_valid)
    q_rows = np.flatnonzero(q_valid)
    result = dedup_gallery(
        g_hashes[g_rows],
        q_hashes[q_rows],
        [g_caps[i] for i in g_rows],
        [q_caps[i] for i in q_rows],
        threshold=int(cfg["threshold"]),
    )
    kept_original = g_rows[result.kept]
    if cfg["write_hash_cache"]:
        write_hash_cache(
            cfg["write_hash_cache"],
            [g_ids[i] for i in g_rows],
            g_hashes[g_rows].tolist(),
        )
    with open(out_dir / "kept_ids.txt", "w", encoding="utf-8") as fh:
        for i in kept_original:
            fh.write(g_ids[int(i)] + "\n")
    payload = {
        **_echo(cfg),
        "stats": {
            **result.stats,
            "undecodable_gallery": len(g_bad),
            "undecodable_queries": len(q_bad),
        },
        "undecodable_gallery_ids": g_bad,
        "undecodable_query_ids": q_bad,
        "removed_vs_queries": [g_ids[int(i)] for i in
                               g_rows[result.removed_vs_queries]],
        "removed_within": [g_ids[int(i)] for i in
                           g_rows[result.removed_within]],
        "kept_count": int(kept_original.size),
        "clusters": [[g_ids[int(i)] for i in g_rows[c]]
                     for c in result.clusters],
    }
    _write_json(out_dir / "dedup.json", payload)
    return 0


def cmd_trend(args) -> int:
    defaults = {"scores": None, "out_dir": "."}
    cfg = _merge_config(args, defaults)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    points = load_scores_csv(cfg["scores"])
    table = trend_table(points)
    write_table_json(out_dir / "trend.json", table, config=_echo(cfg))
    write_table_csv(out_dir / "trend.csv", table)
    return 0


def cmd_synth(args) -> int:
    defaults = {
        "n_sources": 256, "dim_a": 32, "dim_b": 32, "shared_dim": 16,
        "noise_a": 0.0, "noise_b": 0.0, "classes": None,
        "mult_a": 1, "mult_b": 1, "seed": 0, "out_dir": ".",
    }
    cfg = _merge_config(args, defaults)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = SynthSpec(
        n_sources=int(cfg["n_sources"]),
        dim_a=int(cfg["dim_a"]),
        dim_b=int(cfg["dim_b"]),
        shared_dim=int(cfg["shared_dim"]),
        noise_a=float(cfg["noise_a"]),
        noise_b=float(cfg["noise_b"]),
        classes=None if cfg["classes"] is None else int(cfg["classes"]),
        group_multiplicity_a=int(cfg["mult_a"]),
        group_multiplicity_b=int(cfg["mult_b"]),
        seed=int(cfg["seed"]),
    )
    emb_a, emb_b, manifest = generate(spec)
    write_embeddings(out_dir / "a.emb", emb_a.values)
    write_embeddings(out_dir / "b.emb", emb_b.values)
    write_manifest(out_dir / "manifest_a.jsonl", manifest)
    write_manifest(out_dir / "manifest_b.jsonl", manifest.with_modality("text"))
    _write_json(out_dir / "synth.json",
                {**_echo(cfg), "pair_count": spec.pair_count})
    return 0


def cmd_report(args) -> int:
    defaults = {"inputs": None, "out_dir": "."}
    cfg = _merge_config(args, defaults)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = cfg["inputs"] if isinstance(cfg["inputs"], list) else [cfg["inputs"]]
    if not inputs:
        raise StoreError("no input files given")
    merged = []
    seen = {}
    for path in inputs:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != TIDY_HEADER:
                raise StoreError(
                    f"{path}: header {reader.fieldnames} does not match the "
                    f"golden header {TIDY_HEADER}"
                )
            for row in reader:
                key = (row["experiment"], row["pair"], row["gallery_size"],
                       row["k"], row["metric"])
                if key in seen:
                    raise StoreError(
                        f"{path}: duplicate key {key} (first seen in "
                        f"{seen[key]})"
                    )
                seen[key] = str(path)
                merged.append(row)
    merged.sort(key=lambda r: (r["experiment"], r["pair"],
                               int(r["gallery_size"]), int(r["k"]),
                               r["metric"]))
    _write_tidy(out_dir / "report.csv", merged)
    _write_json(out_dir / "report.json",
                {**_echo({**cfg, "inputs": [str(p) for p in inputs]}),
                 "row_count": len(merged)})
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--seed", type=int, help="64-bit experiment seed")
    sub.add_argument("--threads", type=int, help="worker thread cap")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.add_argument("--config", help="JSON config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modalign",
        description="Cross-modal representational alignment toolkit",
    )
    parser.add_argument("--version", action="version",
                        version=f"modalign {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("align", help="mutual-kNN alignment of two spaces")
    p.add_argument("--emb-a", dest="emb_a", nargs="+",
                   help="modality A embedding file(s), one per layer")
    p.add_argument("--emb-b", dest="emb_b", nargs="+",
                   help="modality B embedding file(s), one per layer")
    p.add_argument("--manifest-a", dest="manifest_a")
    p.add_argument("--manifest-b", dest="manifest_b")
    p.add_argument("--k", dest="ks", type=_int_list,
                   help="comma-separated neighborhood sizes")
    p.add_argument("--probe-size", dest="probe_size", type=int,
                   help="probe subset size for the layer-pair sweep")
    p.add_argument("--per-sample", dest="per_sample", action="store_true",
                   default=None, help="include per-sample scores in JSON")
    p.add_argument("--dump-neighbors", dest="dump_neighbors",
                   action="store_true", default=None,
                   help="write neighbor lists as JSON Lines")
    _add_common(p)
    p.set_defaults(func=cmd_align)

    p = subs.add_parser("scale-curve",
                        help="alignment over nested galleries of growing size")
    p.add_argument("--emb-a", dest="emb_a")
    p.add_argument("--emb-b", dest="emb_b")
    p.add_argument("--manifest-a", dest="manifest_a")
    p.add_argument("--manifest-b", dest="manifest_b")
    p.add_argument("--sizes", type=_int_list,
                   help="comma-separated gallery sizes")
    p.add_argument("--k", dest="ks", type=_int_list)
    p.add_argument("--query-count", dest="query_count", type=int)
    p.add_argument("--queries-file", dest="queries_file",
                   help="file with one query index per line")
    _add_common(p)
    p.set_defaults(func=cmd_scale_curve)

    p = subs.add_parser("decompose",
                        help="class-level vs instance-level agreement")
    p.add_argument("--emb-a", dest="emb_a")
    p.add_argument("--emb-b", dest="emb_b")
    p.add_argument("--manifest", help="labeled manifest (class_label set)")
    p.add_argument("--ipc", type=_int_list,
                   help="comma-separated items-per-class values")
    p.add_argument("--k", dest="ks", type=_int_list)
    _add_common(p)
    p.set_defaults(func=cmd_decompose)

    p = subs.add_parser("dedup", help="four-stage gallery deduplication")
    p.add_argument("--gallery", help="gallery corpus JSONL (id, caption, image?)")
    p.add_argument("--queries", help="query corpus JSONL (id, caption, image?)")
    p.add_argument("--gallery-hash-cache", dest="gallery_hash_cache")
    p.add_argument("--queries-hash-cache", dest="queries_hash_cache")
    p.add_argument("--threshold", type=int, help="Hamming threshold")
    p.add_argument("--write-hash-cache", dest="write_hash_cache",
                   help="write computed gallery hashes to this path")
    _add_common(p)
    p.set_defaults(func=cmd_dedup)

    p = subs.add_parser("trend", help="alignment-vs-performance trend table")
    p.add_argument("--scores", help="scores CSV")
    _add_common(p)
    p.set_defaults(func=cmd_trend)

    p = subs.add_parser("synth", help="generate synthetic paired spaces")
    p.add_argument("--n-sources", dest="n_sources", type=int)
    p.add_argument("--dim-a", dest="dim_a", type=int)
    p.add_argument("--dim-b", dest="dim_b", type=int)
    p.add_argument("--shared-dim", dest="shared_dim", type=int)
    p.add_argument("--noise-a", dest="noise_a", type=float)
    p.add_argument("--noise-b", dest="noise_b", type=float)
    p.add_argument("--classes", type=int)
    p.add_argument("--mult-a", dest="mult_a", type=int,
                   help="image variants per source")
    p.add_argument("--mult-b", dest="mult_b", type=int,
                   help="caption variants per source")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("report", help="merge tidy curve CSVs")
    p.add_argument("--inputs", nargs="+", help="curve CSV files to merge")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None):
        set_threads(args.threads)
    try:
        return args.func(args)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
