"""Writer and verifier for the "D2SE" chunk-vector interchange format.

Layout, all little-endian: magic b"D2SE", version u16 (=1), width h u32,
record count u64; then per record: doc-id byte length u16, UTF-8 id bytes,
chunk index u16, h IEEE-754 float32 values. The byte layout is shared with
the classifier package that consumes these files, so it must never drift.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import FormatError

__all__ = ["STORE_MAGIC", "STORE_VERSION", "StoreSummary", "StoreWriter", "iter_records", "verify_store"]

STORE_MAGIC = b"D2SE"
STORE_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")
_U16 = struct.Struct("<H")


class StoreWriter:
    """Streams records to disk; the count must be known up front.

    Use as a context manager; closing with fewer or more records than
    promised raises, since the header count would then lie.
    """

    def __init__(self, path: str | Path, h: int, count: int):
        if h <= 0:
            raise ValueError(f"h must be positive, got {h}")
        if count < 0:
            raise ValueError(f"count must be non-negative, got {count}")
        self.h = h
        self.count = count
        self.written = 0
        self._fh = Path(path).open("wb")
        self._fh.write(_HEADER.pack(STORE_MAGIC, STORE_VERSION, h, count))

    def write(self, doc_id: str, chunk_index: int, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype="<f4")
        if vec.shape != (self.h,):
            raise ValueError(f"vector for ({doc_id!r}, {chunk_index}) has shape {vec.shape}, want ({self.h},)")
        if self.written >= self.count:
            raise ValueError(f"more than the promised {self.count} records")
        id_bytes = doc_id.encode("utf-8")
        self._fh.write(_U16.pack(len(id_bytes)))
        self._fh.write(id_bytes)
        self._fh.write(_U16.pack(chunk_index))
        self._fh.write(vec.tobytes())
        self.written += 1

    def close(self) -> None:
        self._fh.close()
        if self.written != self.count:
            raise ValueError(f"wrote {self.written} records, header promised {self.count}")

    def __enter__(self) -> "StoreWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is not None:
            self._fh.close()
            return
        self.close()


@dataclass(frozen=True)
class StoreSummary:
    h: int
    count: int
    n_documents: int
    file_size: int


def _take(buf: bytes, pos: int, n: int, what: str) -> tuple[bytes, int]:
    if pos + n > len(buf):
        raise FormatError(f"truncated while reading {what}", pos)
    return buf[pos : pos + n], pos + n


def iter_records(path: str | Path) -> Iterator[tuple[str, int, np.ndarray]]:
    """Yield (doc_id, chunk_index, vector) in file order, validating as it goes."""
    buf = Path(path).read_bytes()
    raw, pos = _take(buf, 0, _HEADER.size, "header")
    magic, version, h, count = _HEADER.unpack(raw)
    if magic != STORE_MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != STORE_VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    seen: set[tuple[str, int]] = set()
    for _ in range(count):
        raw, pos = _take(buf, pos, _U16.size, "doc-id length")
        (id_len,) = _U16.unpack(raw)
        raw, pos = _take(buf, pos, id_len, "doc id")
        try:
            doc_id = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("doc id is not valid UTF-8", pos - id_len) from None
        raw, pos = _take(buf, pos, _U16.size, "chunk index")
        (chunk_index,) = _U16.unpack(raw)
        raw, pos = _take(buf, pos, 4 * h, "vector")
        vec = np.frombuffer(raw, dtype="<f4").copy()
        if not np.isfinite(vec).all():
            raise FormatError(f"non-finite vector for ({doc_id!r}, {chunk_index})", pos - 4 * h)
        key = (doc_id, int(chunk_index))
        if key in seen:
            raise FormatError(f"duplicate record for ({doc_id!r}, {chunk_index})", pos - 4 * h)
        seen.add(key)
        yield doc_id, int(chunk_index), vec
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after last record", pos)


def verify_store(path: str | Path) -> StoreSummary:
    """Scan the whole file; any structural inconsistency raises FormatError."""
    path = Path(path)
    buf = path.read_bytes()
    raw, _ = _take(buf, 0, _HEADER.size, "header")
    _, _, h, _ = _HEADER.unpack(raw)
    docs: set[str] = set()
    count = 0
    for doc_id, _, _ in iter_records(path):
        docs.add(doc_id)
        count += 1
    return StoreSummary(h=int(h), count=count, n_documents=len(docs), file_size=len(buf))
