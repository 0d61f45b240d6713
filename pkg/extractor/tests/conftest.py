import json

import numpy as np
import pytest
import torch


VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "a", "the", "cat", "dog", "bird", "sits", "runs", "flies",
    "on", "under", "red", "blue", "green", "mat", "tree", "sky",
]


@pytest.fixture(scope="session")
def vision_model_dir(tmp_path_factory):
    from transformers import ViTConfig, ViTModel

    torch.manual_seed(0)
    path = tmp_path_factory.mktemp("models") / "tiny-vit"
    config = ViTConfig(
        hidden_size=32, num_hidden_layers=2, num_attention_heads=2,
        intermediate_size=48, image_size=24, patch_size=8,
    )
    ViTModel(config).save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def text_model_dir(tmp_path_factory):
    from transformers import BertConfig, BertModel, BertTokenizer

    torch.manual_seed(1)
    path = tmp_path_factory.mktemp("models") / "tiny-bert"
    path.mkdir(parents=True)
    vocab_file = path / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n")
    config = BertConfig(
        vocab_size=len(VOCAB), hidden_size=32, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=48,
        max_position_embeddings=40,
    )
    BertModel(config).save_pretrained(path)
    BertTokenizer(str(vocab_file)).save_pretrained(path)
    return str(path)


def write_corpus(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return str(path)


def make_images(directory, count, seed=0):
    from PIL import Image

    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        arr = rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8)
        p = directory / f"img{i}.png"
        Image.fromarray(arr).save(p)
        paths.append(str(p))
    return paths


CAPTION_POOL = [
    "a cat sits on the mat",
    "the dog runs under a tree",
    "a bird flies on the sky",
    "the red cat runs",
    "a blue bird sits under the tree",
    "the green dog flies",
    "a cat runs on the tree",
    "the bird sits on a mat",
]


def make_captions(count):
    return [CAPTION_POOL[i % len(CAPTION_POOL)] + f" {VOCAB[5 + i % 16]}"
            for i in range(count)]
