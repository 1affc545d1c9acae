"""Binary interchange format for precomputed chunk vectors ("D2SE" files).

Layout, all little-endian: magic b"D2SE", version u16 (=1), width h u32,
record count u64; then per record: doc-id byte length u16, UTF-8 id bytes,
chunk index u16, h IEEE-754 float32 values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import MissingEmbeddingError, StoreFormatError

__all__ = ["STORE_MAGIC", "STORE_VERSION", "EmbeddingStore", "write_store", "read_store"]

STORE_MAGIC = b"D2SE"
STORE_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")
_U16 = struct.Struct("<H")


@dataclass
class EmbeddingStore:
    """(doc_id, chunk_index) -> float32 vector of width h."""

    h: int
    vectors: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, doc_id: str, chunk_index: int) -> np.ndarray:
        try:
            return self.vectors[(doc_id, chunk_index)]
        except KeyError:
            raise MissingEmbeddingError(doc_id, chunk_index) from None


def write_store(path: str | Path, h: int, records: Iterable[tuple[str, int, np.ndarray]]) -> int:
    """Write records (doc_id, chunk_index, vector) in order; returns the count."""
    records = list(records)
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(STORE_MAGIC, STORE_VERSION, h, len(records)))
        for doc_id, chunk_index, vec in records:
            vec = np.asarray(vec, dtype="<f4")
            if vec.shape != (h,):
                raise ValueError(f"vector for ({doc_id!r}, {chunk_index}) has shape {vec.shape}, want ({h},)")
            id_bytes = doc_id.encode("utf-8")
            fh.write(_U16.pack(len(id_bytes)))
            fh.write(id_bytes)
            fh.write(_U16.pack(chunk_index))
            fh.write(vec.tobytes())
    return len(records)


def _take(buf: bytes, pos: int, n: int, what: str) -> tuple[bytes, int]:
    if pos + n > len(buf):
        raise StoreFormatError(f"truncated while reading {what}", pos)
    return buf[pos : pos + n], pos + n


def read_store(path: str | Path) -> EmbeddingStore:
    """Parse a D2SE file; any structural inconsistency raises StoreFormatError."""
    buf = Path(path).read_bytes()
    raw, pos = _take(buf, 0, _HEADER.size, "header")
    magic, version, h, count = _HEADER.unpack(raw)
    if magic != STORE_MAGIC:
        raise StoreFormatError(f"bad magic {magic!r}", 0)
    if version != STORE_VERSION:
        raise StoreFormatError(f"unsupported version {version}", 4)
    store = EmbeddingStore(h=int(h))
    for _ in range(count):
        raw, pos = _take(buf, pos, _U16.size, "doc-id length")
        (id_len,) = _U16.unpack(raw)
        raw, pos = _take(buf, pos, id_len, "doc id")
        try:
            doc_id = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise StoreFormatError("doc id is not valid UTF-8", pos - id_len) from None
        raw, pos = _take(buf, pos, _U16.size, "chunk index")
        (chunk_index,) = _U16.unpack(raw)
        raw, pos = _take(buf, pos, 4 * h, "vector")
        vec = np.frombuffer(raw, dtype="<f4").copy()
        if not np.isfinite(vec).all():
            raise StoreFormatError(f"non-finite vector for ({doc_id!r}, {chunk_index})", pos - 4 * h)
        key = (doc_id, int(chunk_index))
        if key in store.vectors:
            raise StoreFormatError(f"duplicate record for ({doc_id!r}, {chunk_index})", pos - 4 * h)
        store.vectors[key] = vec
    if pos != len(buf):
        raise StoreFormatError(f"{len(buf) - pos} trailing bytes after last record", pos)
    return store
