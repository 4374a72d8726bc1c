"""Deterministic pseudo-embeddings derived from the context text itself.

The vector is a pure function of (context string, dimension): the text is
hashed with blake2b and the digest seeds the generator. Identical contexts
get bit-identical vectors on any machine and any run, which is exactly what
the downstream pipeline tests need; there is no semantic content.
"""

import hashlib

import numpy as np


def fake_embedding(text: str, dim: int = 768) -> np.ndarray:
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    seed = int.from_bytes(digest, "little")
    gen = np.random.Generator(np.random.PCG64(seed))
    return (2.0 * gen.random(dim, dtype=np.float64) - 1.0).astype(np.float32)
