"""Extraction contracts: shapes, determinism, skip handling, validation."""

import json

import numpy as np
import pytest

from pyextract import ExtractError, ExtractionJob, extract
from pyextract.cli import main as cli_main

from conftest import make_captions, make_images, write_corpus


class TestTextExtraction:
    def test_three_captions_two_layers(self, tmp_path, text_model_dir):
        corpus = write_corpus(
            tmp_path / "c.jsonl",
            [{"id": f"t{i}", "caption": cap}
             for i, cap in enumerate(make_captions(3))])
        job = ExtractionJob(
            model_name=text_model_dir, modality="text", corpus=corpus,
            out_dir=str(tmp_path / "out"), layer_indices=[0, 2])
        result = extract(job)
        assert sorted(result.layer_files) == [0, 2]
        import modalign

        for layer, path in result.layer_files.items():
            e = modalign.load_embeddings(path)
            assert (e.count, e.dim, e.layer) == (3, 32, layer)

    def test_deterministic_reruns(self, tmp_path, text_model_dir):
        corpus = write_corpus(
            tmp_path / "c.jsonl",
            [{"id": f"t{i}", "caption": cap}
             for i, cap in enumerate(make_captions(5))])
        blobs = []
        for run in ("one", "two"):
            job = ExtractionJob(
                model_name=text_model_dir, modality="text", corpus=corpus,
                out_dir=str(tmp_path / run), layer_indices="all",
                batch_size=2)
            result = extract(job)
            blobs.append(b"".join(
                p.read_bytes() for _, p in sorted(result.layer_files.items())
            ) + result.manifest_file.read_bytes())
        assert blobs[0] == blobs[1]

    def test_empty_caption_skipped_not_zero_vector(self, tmp_path,
                                                   text_model_dir):
        rows = [{"id": "good", "caption": "a cat sits"},
                {"id": "blank", "caption": "   "},
                {"id": "also-good", "caption": "the dog runs"}]
        corpus = write_corpus(tmp_path / "c.jsonl", rows)
        job = ExtractionJob(
            model_name=text_model_dir, modality="text", corpus=corpus,
            out_dir=str(tmp_path / "out"))
        result = extract(job)
        assert result.row_ids == ["good", "also-good"]
        assert [s["id"] for s in result.skipped] == ["blank"]
        import modalign

        e = modalign.load_embeddings(result.layer_files[0])
        assert e.count == 2  # skipped row absent from file and manifest
        manifest = modalign.load_manifest(result.manifest_file)
        assert manifest.ids() == ["good", "also-good"]

    def test_truncation_recorded(self, tmp_path, text_model_dir):
        corpus = write_corpus(
            tmp_path / "c.jsonl",
            [{"id": "t", "caption": "a cat " * 50}])
        job = ExtractionJob(
            model_name=text_model_dir, modality="text", corpus=corpus,
            out_dir=str(tmp_path / "out"), max_length=8)
        result = extract(job)
        sidecar = json.loads(result.sidecar_file.read_text())
        assert "max_length=8" in sidecar["preprocessing"]


class TestVisionExtraction:
    def test_cls_token_shapes(self, tmp_path, vision_model_dir):
        paths = make_images(tmp_path / "imgs", 4)
        corpus = write_corpus(
            tmp_path / "c.jsonl",
            [{"id": f"i{n}", "image": p} for n, p in enumerate(paths)])
        job = ExtractionJob(
            model_name=vision_model_dir, modality="image", corpus=corpus,
            out_dir=str(tmp_path / "out"), layer_indices="all",
            batch_size=3)
        result = extract(job)
        assert sorted(result.layer_files) == [0, 1, 2]
        import modalign

        e = modalign.load_embeddings(result.layer_files[2])
        assert (e.count, e.dim) == (4, 32)
        sidecar = json.loads(result.sidecar_file.read_text())
        assert sidecar["pooling"] == "cls_token"
        assert sidecar["row_ids"] == [f"i{n}" for n in range(4)]

    def test_unreadable_image_skipped(self, tmp_path, vision_model_dir):
        paths = make_images(tmp_path / "imgs", 2)
        broken = tmp_path / "imgs" / "broken.png"
        broken.write_bytes(b"not an image at all")
        rows = [{"id": "i0", "image": paths[0]},
                {"id": "bad", "image": str(broken)},
                {"id": "i1", "image": paths[1]}]
        corpus = write_corpus(tmp_path / "c.jsonl", rows)
        job = ExtractionJob(
            model_name=vision_model_dir, modality="image", corpus=corpus,
            out_dir=str(tmp_path / "out"), layer_indices=[1])
        result = extract(job)
        assert result.row_ids == ["i0", "i1"]
        assert result.skipped[0]["id"] == "bad"
        import modalign

        manifest = modalign.load_manifest(result.manifest_file)
        assert manifest.ids() == ["i0", "i1"]
        assert modalign.load_embeddings(result.layer_files[1]).count == 2

    def test_pixel_determinism(self, tmp_path, vision_model_dir):
        paths = make_images(tmp_path / "imgs", 3, seed=5)
        corpus = write_corpus(
            tmp_path / "c.jsonl",
            [{"id": f"i{n}", "image": p} for n, p in enumerate(paths)])
        outs = []
        for run in ("a", "b"):
            job = ExtractionJob(
                model_name=vision_model_dir, modality="image", corpus=corpus,
                out_dir=str(tmp_path / run), layer_indices=[2])
            result = extract(job)
            outs.append(result.layer_files[2].read_bytes())
        assert outs[0] == outs[1]


class TestValidation:
    def test_bad_model_path(self, tmp_path):
        corpus = write_corpus(tmp_path / "c.jsonl",
                              [{"id": "t", "caption": "a cat"}])
        job = ExtractionJob(
            model_name=str(tmp_path / "nope"), modality="text",
            corpus=corpus, out_dir=str(tmp_path / "out"))
        with pytest.raises(ExtractError, match="cannot load model"):
            extract(job)

    def test_layer_out_of_range(self, tmp_path, text_model_dir):
        corpus = write_corpus(tmp_path / "c.jsonl",
                              [{"id": "t", "caption": "a cat"}])
        job = ExtractionJob(
            model_name=text_model_dir, modality="text", corpus=corpus,
            out_dir=str(tmp_path / "out"), layer_indices=[9])
        with pytest.raises(ExtractError, match="out of range"):
            extract(job)

    def test_bad_modality_and_pooling(self, tmp_path):
        with pytest.raises(ExtractError, match="modality"):
            ExtractionJob(model_name="m", modality="audio", corpus="c",
                          out_dir="o")
        with pytest.raises(ExtractError, match="pooling"):
            ExtractionJob(model_name="m", modality="text", corpus="c",
                          out_dir="o", pooling="max")

    def test_missing_corpus_key(self, tmp_path, text_model_dir):
        corpus = write_corpus(tmp_path / "c.jsonl", [{"id": "t"}])
        job = ExtractionJob(
            model_name=text_model_dir, modality="text", corpus=corpus,
            out_dir=str(tmp_path / "out"))
        with pytest.raises(ExtractError, match="caption"):
            extract(job)


class TestCli:
    def test_end_to_end(self, tmp_path, text_model_dir, capsys):
        corpus = write_corpus(
            tmp_path / "c.jsonl",
            [{"id": f"t{i}", "caption": cap}
             for i, cap in enumerate(make_captions(3))])
        code = cli_main([
            "--model", text_model_dir, "--modality", "text",
            "--corpus", corpus, "--out-dir", str(tmp_path / "out"),
            "--layers", "0,1",
        ])
        assert code == 0
        assert "2 layer file(s), 3 rows" in capsys.readouterr().out
        assert (tmp_path / "out" / "layer00.emb").exists()
        assert (tmp_path / "out" / "manifest.jsonl").exists()

    def test_error_exit_code(self, tmp_path, capsys):
        corpus = write_corpus(tmp_path / "c.jsonl",
                              [{"id": "t", "caption": "a"}])
        code = cli_main([
            "--model", str(tmp_path / "missing"), "--modality", "text",
            "--corpus", corpus, "--out-dir", str(tmp_path / "out"),
        ])
        assert code == 2
        assert "error:" in capsys.readouterr().err
