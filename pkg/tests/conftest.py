import numpy as np
import pytest

from disrank.embstore import EmbeddingRecord, EmbeddingStore, context_keys, write_store
from disrank.rng import SplitMix64, derive_seed


def fake_vector(key: str, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-embedding derived from the key string.

    float32-representable values so EMBS round trips are bit-exact.
    """
    key_seed = 0
    for byte in key.encode("utf-8"):
        key_seed = (key_seed * 131 + byte) & ((1 << 64) - 1)
    rng = SplitMix64(derive_seed(seed, key_seed))
    return (2.0 * rng.uniform(dim) - 1.0).astype(np.float32).astype(np.float64)


def fake_store(instance_ids, dim: int, seed: int = 0) -> EmbeddingStore:
    records = {}
    for iid in instance_ids:
        for key in context_keys(iid):
            records[key] = fake_vector(key, dim, seed)
    return EmbeddingStore(dim, records)


def write_fake_store(path, instance_ids, dim: int, seed: int = 0) -> EmbeddingStore:
    store = fake_store(instance_ids, dim, seed)
    write_store(
        [EmbeddingRecord(k, store.get(k)) for k in store.keys()], path, dim=dim
    )
    return store


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
