"""Chunk-vector exporter: runs a pretrained encoder over a chunked corpus and
writes one CLS vector per chunk in the D2SE binary interchange format."""

from .chunkfile import ChunkRecord, read_chunk_file
from .errors import ChunkFileError, ExportError, FormatError, ModelLoadError
from .exporter import ExportJob, ExportResult, run_export
from .store import STORE_MAGIC, STORE_VERSION, StoreSummary, StoreWriter, iter_records, verify_store

__all__ = [
    "ChunkRecord",
    "read_chunk_file",
    "ChunkFileError",
    "ExportError",
    "FormatError",
    "ModelLoadError",
    "ExportJob",
    "ExportResult",
    "run_export",
    "STORE_MAGIC",
    "STORE_VERSION",
    "StoreSummary",
    "StoreWriter",
    "iter_records",
    "verify_store",
]

__version__ = "0.1.0"
