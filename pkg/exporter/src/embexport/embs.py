"""EMBS store writer (plus a reader for self-checks).

Layout, little-endian: magic ``EMBS``, version u16 = 1, dim u32, count u64,
then per record a u16 key length, the UTF-8 key bytes, and dim float32
components. Records are written sorted by key bytes, which makes the output
canonical: identical inputs produce byte-identical files.
"""

import struct

import numpy as np

from . import ExporterError

MAGIC = b"EMBS"
VERSION = 1
_HEADER = struct.Struct("<4sHIQ")
_KEYLEN = struct.Struct("<H")


def write_store(records, path, dim):
    """``records`` is an iterable of (key, float32-compatible vector)."""
    encoded = []
    seen = set()
    for key, vec in records:
        arr = np.asarray(vec, dtype="<f4")
        if arr.shape != (dim,):
            raise ExporterError(f"record {key!r}: dimension {arr.shape} != ({dim},)")
        if not np.all(np.isfinite(arr)):
            raise ExporterError(f"record {key!r}: non-finite components")
        if key in seen:
            raise ExporterError(f"duplicate key {key!r}")
        seen.add(key)
        encoded.append((key.encode("utf-8"), arr.tobytes()))
    encoded.sort(key=lambda kv: kv[0])
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, dim, len(encoded)))
        for kb, vb in encoded:
            if len(kb) > 0xFFFF:
                raise ExporterError("key too long")
            f.write(_KEYLEN.pack(len(kb)))
            f.write(kb)
            f.write(vb)


def read_store(path):
    """Minimal reader used by the exporter's own round-trip checks."""
    with open(path, "rb") as f:
        blob = f.read()
    magic, version, dim, count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC or version != VERSION:
        raise ExporterError(f"{path}: not a version-{VERSION} EMBS file")
    offset = _HEADER.size
    records = {}
    for _ in range(count):
        (key_len,) = _KEYLEN.unpack_from(blob, offset)
        offset += _KEYLEN.size
        key = blob[offset : offset + key_len].decode("utf-8")
        offset += key_len
        records[key] = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
    if offset != len(blob):
        raise ExporterError(f"{path}: trailing bytes")
    return dim, records
