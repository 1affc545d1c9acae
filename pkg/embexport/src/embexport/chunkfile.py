"""Reader for chunked-corpus JSONL files.

One JSON object per line: {"doc_id": str, "chunk_index": int, "tokens": [str, ...]}.
Blank lines are skipped. Records keep file order; chunk identity is positional,
so the exporter never reorders or renumbers them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ChunkFileError

__all__ = ["ChunkRecord", "read_chunk_file"]

# doc-id byte length and chunk index are stored as u16 in the output format
_U16_MAX = 0xFFFF


@dataclass(frozen=True)
class ChunkRecord:
    doc_id: str
    chunk_index: int
    tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def _field(obj: dict, key: str, path: str, lineno: int):
    if key not in obj:
        raise ChunkFileError(path, lineno, f"missing field {key!r}")
    return obj[key]


def read_chunk_file(path: str | Path) -> list[ChunkRecord]:
    """Parse and validate a chunk file; raises ChunkFileError on the first bad line."""
    path = Path(path)
    records: list[ChunkRecord] = []
    seen: set[tuple[str, int]] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ChunkFileError(str(path), lineno, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ChunkFileError(str(path), lineno, "line is not a JSON object")
            doc_id = _field(obj, "doc_id", str(path), lineno)
            chunk_index = _field(obj, "chunk_index", str(path), lineno)
            tokens = _field(obj, "tokens", str(path), lineno)
            if not isinstance(doc_id, str) or not doc_id:
                raise ChunkFileError(str(path), lineno, "doc_id must be a non-empty string")
            if len(doc_id.encode("utf-8")) > _U16_MAX:
                raise ChunkFileError(str(path), lineno, "doc_id longer than 65535 bytes")
            if isinstance(chunk_index, bool) or not isinstance(chunk_index, int):
                raise ChunkFileError(str(path), lineno, "chunk_index must be an integer")
            if not 0 <= chunk_index <= _U16_MAX:
                raise ChunkFileError(str(path), lineno, f"chunk_index {chunk_index} outside [0, {_U16_MAX}]")
            if not isinstance(tokens, list) or not tokens:
                raise ChunkFileError(str(path), lineno, "tokens must be a non-empty list")
            if not all(isinstance(t, str) and t for t in tokens):
                raise ChunkFileError(str(path), lineno, "tokens must all be non-empty strings")
            key = (doc_id, chunk_index)
            if key in seen:
                raise ChunkFileError(str(path), lineno, f"duplicate chunk ({doc_id!r}, {chunk_index})")
            seen.add(key)
            records.append(ChunkRecord(doc_id, chunk_index, tuple(tokens)))
    return records
