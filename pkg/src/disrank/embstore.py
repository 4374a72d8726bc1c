"""Binary store for fixed-dimension embedding vectors keyed by string ids.

EMBS file layout, little-endian throughout:

* magic ``EMBS`` (4 bytes), version u16 = 1
* dim u32, record count u64
* per record: key length u16, UTF-8 key bytes, dim float32 components

Writers emit records sorted by key bytes (canonical form, so identical
inputs give byte-identical files on any platform); readers accept any order.
Vectors are stored in float32 but widened to float64 on load, so all
downstream math runs in 64-bit while the round trip stays bit-exact.

Keys follow the convention ``<instance_id>#1`` / ``<instance_id>#2`` for the
first and second context of a use pair.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, MissingKeyError, ValidationError

MAGIC = b"EMBS"
VERSION = 1
_HEADER = struct.Struct("<4sHIQ")
_KEYLEN = struct.Struct("<H")


@dataclass(frozen=True)
class EmbeddingRecord:
    key: str
    vector: np.ndarray


@dataclass(frozen=True)
class PairFeature:
    """Concatenated [E(context1), E(context2)] feature for one instance."""

    instance_id: str
    x: np.ndarray


class EmbeddingStore:
    """Immutable id -> float64 vector map with a uniform dimension."""

    def __init__(self, dim: int, records: dict):
        if dim <= 0:
            raise ValidationError(f"embedding dimension must be > 0, got {dim}")
        self.dim = int(dim)
        self._records = records

    def __len__(self):
        return len(self._records)

    def __contains__(self, key):
        return key in self._records

    def keys(self):
        return self._records.keys()

    def get(self, key: str) -> np.ndarray:
        try:
            return self._records[key]
        except KeyError:
            raise MissingKeyError([key]) from None


def context_keys(instance_id: str):
    return f"{instance_id}#1", f"{instance_id}#2"


def write_store(records, path, dim=None) -> None:
    """Write records in canonical EMBS form.

    ``dim`` is inferred from the records; it must be given explicitly for an
    empty store.
    """
    records = list(records)
    if dim is None:
        if not records:
            raise ValidationError("empty record list requires an explicit dim")
        dim = len(records[0].vector)
    keys = set()
    encoded = []
    for rec in records:
        vec = np.asarray(rec.vector)
        if vec.shape != (dim,):
            raise ValidationError(
                f"record {rec.key!r} has dimension {vec.shape}, expected ({dim},)"
            )
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"record {rec.key!r} has non-finite components")
        if rec.key in keys:
            raise ValidationError(f"duplicate key {rec.key!r}")
        keys.add(rec.key)
        kb = rec.key.encode("utf-8")
        if len(kb) > 0xFFFF:
            raise ValidationError(f"key too long: {rec.key[:40]!r}...")
        encoded.append((kb, np.asarray(vec, dtype="<f4").tobytes()))
    encoded.sort(key=lambda kv: kv[0])

    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, dim, len(encoded)))
        for kb, vb in encoded:
            f.write(_KEYLEN.pack(len(kb)))
            f.write(kb)
            f.write(vb)


def read_store(path) -> EmbeddingStore:
    """Load an EMBS file; malformed input raises FormatError with an offset."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise FormatError("file shorter than header", path, offset=len(blob))
    magic, version, dim, count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", path, offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", path, offset=4)
    if dim == 0:
        raise FormatError("dimension must be > 0", path, offset=6)

    records = {}
    offset = _HEADER.size
    vec_bytes = 4 * dim
    for _ in range(count):
        if offset + _KEYLEN.size > len(blob):
            raise FormatError(
                f"truncated: expected {count} records, found {len(records)}",
                path,
                offset=offset,
            )
        (key_len,) = _KEYLEN.unpack_from(blob, offset)
        offset += _KEYLEN.size
        if offset + key_len + vec_bytes > len(blob):
            raise FormatError("truncated record", path, offset=offset)
        key = blob[offset : offset + key_len].decode("utf-8")
        offset += key_len
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset)
        offset += vec_bytes
        if key in records:
            raise FormatError(f"duplicate key {key!r}", path, offset=offset)
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"non-finite components in {key!r}", path, offset=offset)
        records[key] = vec.astype(np.float64)
    if offset != len(blob):
        raise FormatError(
            f"{len(blob) - offset} trailing bytes after {count} records",
            path,
            offset=offset,
        )
    return EmbeddingStore(dim, records)


def store_records(store: EmbeddingStore):
    """Records of a store, suitable for re-writing canonically."""
    return [EmbeddingRecord(k, v) for k, v in store._records.items()]


def pair_feature(store: EmbeddingStore, pair) -> PairFeature:
    """Concatenate the two context embeddings of a use pair, context 1 first."""
    k1, k2 = context_keys(pair.instance_id)
    return PairFeature(pair.instance_id, np.concatenate([store.get(k1), store.get(k2)]))


def missing_keys(store: EmbeddingStore, instance_ids) -> list:
    """All absent context keys for the given instance ids, sorted."""
    absent = []
    for iid in instance_ids:
        for key in context_keys(iid):
            if key not in store:
                absent.append(key)
    return sorted(absent)


def feature_matrix(store: EmbeddingStore, instance_ids):
    """Stack pair features into a (N, 2*dim) float64 matrix, row per id."""
    ids = list(instance_ids)
    absent = missing_keys(store, ids)
    if absent:
        raise MissingKeyError(absent)
    x = np.empty((len(ids), 2 * store.dim), dtype=np.float64)
    for row, iid in enumerate(ids):
        k1, k2 = context_keys(iid)
        x[row, : store.dim] = store.get(k1)
        x[row, store.dim :] = store.get(k2)
    return ids, x
