"""Acceptance: extraction output round-trips through the alignment toolkit.

16 captions and 16 images are embedded by tiny local encoders; the files
must load through the toolkit's binary-format loader, survive normalization,
and a mutual-kNN run of each output against itself must return exactly 1.0.
"""

import modalign
import numpy as np

from pyextract import ExtractionJob, extract

from conftest import make_captions, make_images, write_corpus


def roundtrip(result):
    reports = []
    for _, path in sorted(result.layer_files.items()):
        emb = modalign.load_embeddings(path)          # format validation
        normalized = modalign.normalize(emb)          # no zero rows
        self_map = modalign.identity_self_map(normalized.count)
        k = min(5, normalized.count - 1)
        neigh = modalign.topk(normalized, normalized, k, self_map=self_map)
        reports.append(modalign.mutual_knn(neigh, neigh))
    return reports


class TestExtractionRoundTrip:
    def test_sixteen_captions(self, tmp_path, text_model_dir):
        corpus = write_corpus(
            tmp_path / "caps.jsonl",
            [{"id": f"t{i:02d}", "caption": cap}
             for i, cap in enumerate(make_captions(16))])
        result = extract(ExtractionJob(
            model_name=text_model_dir, modality="text", corpus=corpus,
            out_dir=str(tmp_path / "text_out"), layer_indices="all",
            batch_size=4))
        assert len(result.row_ids) == 16
        for report in roundtrip(result):
            assert report.mean_score == 1.0
        manifest = modalign.load_manifest(result.manifest_file)
        assert manifest.ids() == result.row_ids
        print("\nACCEPTANCE extraction round-trip (16 captions): PASS")

    def test_sixteen_images(self, tmp_path, vision_model_dir):
        paths = make_images(tmp_path / "imgs", 16, seed=3)
        corpus = write_corpus(
            tmp_path / "imgs.jsonl",
            [{"id": f"i{n:02d}", "image": p} for n, p in enumerate(paths)])
        result = extract(ExtractionJob(
            model_name=vision_model_dir, modality="image", corpus=corpus,
            out_dir=str(tmp_path / "img_out"), layer_indices="all",
            batch_size=4))
        assert len(result.row_ids) == 16
        for report in roundtrip(result):
            assert report.mean_score == 1.0
        manifest = modalign.load_manifest(result.manifest_file)
        assert manifest.ids() == result.row_ids
        print("\nACCEPTANCE extraction round-trip (16 images): PASS")

    def test_cross_modal_wiring(self, tmp_path, text_model_dir,
                                vision_model_dir):
        # paired corpus: alignment of two unrelated tiny encoders over
        # random pairs must be finite, valid, and near chance
        captions = make_captions(16)
        img_paths = make_images(tmp_path / "imgs", 16, seed=9)
        text_corpus = write_corpus(
            tmp_path / "caps.jsonl",
            [{"id": f"s{i:02d}-t", "source_id": f"s{i:02d}", "caption": c}
             for i, c in enumerate(captions)])
        img_corpus = write_corpus(
            tmp_path / "imgs.jsonl",
            [{"id": f"s{i:02d}-i", "source_id": f"s{i:02d}", "image": p}
             for i, p in enumerate(img_paths)])
        t_res = extract(ExtractionJob(
            model_name=text_model_dir, modality="text", corpus=text_corpus,
            out_dir=str(tmp_path / "t"), layer_indices=[2]))
        v_res = extract(ExtractionJob(
            model_name=vision_model_dir, modality="image",
            corpus=img_corpus, out_dir=str(tmp_path / "v"),
            layer_indices=[2]))
        emb_t = modalign.normalize(
            modalign.load_embeddings(t_res.layer_files[2]))
        emb_v = modalign.normalize(
            modalign.load_embeddings(v_res.layer_files[2]))
        man_t = modalign.load_manifest(t_res.manifest_file)
        man_v = modalign.load_manifest(v_res.manifest_file)
        from modalign.store import check_paired

        check_paired(man_t, man_v)
        sm = modalign.identity_self_map(16)
        rep = modalign.mutual_knn(
            modalign.topk(emb_t, emb_t, 3, self_map=sm),
            modalign.topk(emb_v, emb_v, 3, self_map=sm))
        assert 0.0 <= rep.mean_score <= 1.0
        assert np.isfinite(rep.per_sample).all()
