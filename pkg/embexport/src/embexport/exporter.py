"""Top-level export job: chunk file in, D2SE store out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .chunkfile import read_chunk_file
from .model import embed_batch, load_encoder
from .store import StoreWriter

__all__ = ["ExportJob", "ExportResult", "run_export"]


@dataclass
class ExportJob:
    chunk_file: str | Path
    model: str
    out: str | Path
    batch_size: int = 32
    max_tokens: int = 512

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        # room for the CLS and SEP positions at minimum
        if self.max_tokens < 2:
            raise ValueError(f"max_tokens must be >= 2, got {self.max_tokens}")


@dataclass(frozen=True)
class ExportResult:
    h: int
    count: int
    n_documents: int


def run_export(job: ExportJob) -> ExportResult:
    """Encode every chunk record and write the store; records keep input order."""
    job.validate()
    records = read_chunk_file(job.chunk_file)
    handle = load_encoder(job.model)
    with StoreWriter(job.out, h=handle.hidden, count=len(records)) as writer:
        for start in range(0, len(records), job.batch_size):
            batch = records[start : start + job.batch_size]
            vectors = embed_batch(handle, [r.text for r in batch], job.max_tokens)
            for rec, vec in zip(batch, vectors):
                writer.write(rec.doc_id, rec.chunk_index, vec)
    return ExportResult(
        h=handle.hidden,
        count=len(records),
        n_documents=len({r.doc_id for r in records}),
    )
