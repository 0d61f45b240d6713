import numpy as np
import pytest

from modalign.store import EmbeddingSet, normalize


def random_embeddings(rng, n, d, layer=0) -> EmbeddingSet:
    """Random normalized embedding set (rows almost surely distinct)."""
    values = rng.standard_normal((n, d)).astype(np.float32)
    return normalize(EmbeddingSet(values, layer=layer))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
