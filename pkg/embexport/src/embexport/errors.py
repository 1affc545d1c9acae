"""Exception types for the exporter."""

from __future__ import annotations


class ExportError(Exception):
    """Base class for all exporter errors."""


class ChunkFileError(ExportError):
    """Malformed chunk-file line; carries 1-based line number."""

    def __init__(self, path: str, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.path = path
        self.lineno = lineno
        self.reason = reason


class ModelLoadError(ExportError):
    """Pretrained model or tokenizer could not be loaded."""

    def __init__(self, identifier: str, reason: str):
        super().__init__(f"cannot load model {identifier!r}: {reason}")
        self.identifier = identifier
        self.reason = reason


class FormatError(ExportError):
    """Store file is structurally invalid; carries byte offset."""

    def __init__(self, reason: str, offset: int):
        super().__init__(f"{reason} (at byte offset {offset})")
        self.offset = offset
