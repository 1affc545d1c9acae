"""Exception types shared across the pipeline."""

from __future__ import annotations


class D2sError(Exception):
    """Base class for all package errors."""


class EmptyDocumentError(D2sError):
    """Document has no tokens left after normalization."""


class EmptyChunkError(D2sError):
    """Chunk passed to the encoder contains no tokens."""


class NoValidChunksError(D2sError):
    """Document matrix carries no valid chunk columns."""


class ParseError(D2sError):
    """Malformed input line; carries 1-based line number."""

    def __init__(self, path: str, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.path = path
        self.lineno = lineno
        self.reason = reason


class DuplicateIdError(D2sError):
    """Corpus contains the same document id twice."""

    def __init__(self, doc_id: str, lineno: int = 0):
        super().__init__(f"duplicate document id {doc_id!r}" + (f" at line {lineno}" if lineno else ""))
        self.doc_id = doc_id
        self.lineno = lineno


class NoLabelsError(D2sError):
    """No document in the corpus carries any label code."""


class MissingEmbeddingError(D2sError):
    """Embedding store lacks a vector for a valid chunk."""

    def __init__(self, doc_id: str, chunk_index: int):
        super().__init__(f"no stored vector for ({doc_id!r}, chunk {chunk_index})")
        self.doc_id = doc_id
        self.chunk_index = chunk_index


class StoreFormatError(D2sError):
    """Embedding store file is structurally invalid; carries byte offset."""

    def __init__(self, reason: str, offset: int):
        super().__init__(f"{reason} (at byte offset {offset})")
        self.offset = offset


class ShapeMismatchError(D2sError):
    """Array arguments disagree on shape."""


class EmptyDatasetError(D2sError):
    """Operation requires at least one document."""


class EmptyTrainingSetError(D2sError):
    """Training requires a non-empty train split."""


class CheckpointError(D2sError):
    """Checkpoint file unreadable or structurally wrong."""


class SchemaVersionError(CheckpointError):
    """Checkpoint schema version is unsupported."""
