"""Chunk encoding: one vector per valid chunk, assembled into a document matrix.

Two encoder modes share the `encode_document` entry point:

* a trainable reference encoder (mean-pooled token embeddings -> affine ->
  tanh) whose gradients are exact and hand-derived, and
* an `EmbeddingStore` of precomputed chunk vectors (frozen by construction).

The document matrix keeps one column per chunk slot; masked columns are zero.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import backend
from .errors import EmptyChunkError, MissingEmbeddingError
from .store import EmbeddingStore
from .textprep import ChunkedDocument

__all__ = [
    "TokenVocabulary",
    "EncoderParameters",
    "EncoderGradients",
    "DocumentMatrix",
    "ReferenceEncoder",
    "init_encoder_params",
    "encode_chunk",
    "encode_chunk_with_cache",
    "encoder_backward",
    "encode_document",
    "encode_document_with_cache",
    "encoder_backward_document",
]

OOV_ID = 0


@dataclass
class TokenVocabulary:
    """Token -> id map; id 0 is reserved for out-of-vocabulary tokens."""

    tokens: list[str]
    index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.index:
            self.index = {tok: i + 1 for i, tok in enumerate(self.tokens)}

    @classmethod
    def build(cls, token_lists: Iterable[list[str]], cap: int = 20000) -> "TokenVocabulary":
        """Most-frequent-first vocabulary (ties lexicographic), capped."""
        counts: Counter[str] = Counter()
        for toks in token_lists:
            counts.update(toks)
        ordered = sorted(counts, key=lambda t: (-counts[t], t))
        return cls(ordered[:cap])

    @property
    def size(self) -> int:
        """Table size including the OOV slot."""
        return len(self.tokens) + 1

    def ids(self, tokens: list[str]) -> np.ndarray:
        return np.array([self.index.get(t, OOV_ID) for t in tokens], dtype=np.int64)


@dataclass
class EncoderParameters:
    token_embeddings: np.ndarray  # (vocab_size, h)
    projection: np.ndarray  # (h, h)
    proj_bias: np.ndarray  # (h,)

    @property
    def h(self) -> int:
        return self.token_embeddings.shape[1]


@dataclass
class EncoderGradients:
    token_embeddings: np.ndarray
    projection: np.ndarray
    proj_bias: np.ndarray

    @classmethod
    def zeros_like(cls, params: EncoderParameters) -> "EncoderGradients":
        return cls(
            np.zeros_like(params.token_embeddings),
            np.zeros_like(params.projection),
            np.zeros_like(params.proj_bias),
        )


def init_encoder_params(vocab_size: int, h: int, rng: np.random.Generator) -> EncoderParameters:
    """Uniform init in [-1/sqrt(h), +1/sqrt(h)]."""
    bound = 1.0 / np.sqrt(h)
    return EncoderParameters(
        token_embeddings=rng.uniform(-bound, bound, size=(vocab_size, h)),
        projection=rng.uniform(-bound, bound, size=(h, h)),
        proj_bias=np.zeros(h),
    )


@dataclass
class DocumentMatrix:
    """One encoder vector per chunk slot, column-per-chunk; masked columns zero."""

    d: np.ndarray  # (h, n) float64
    valid_mask: np.ndarray  # (n,) bool

    @property
    def h(self) -> int:
        return self.d.shape[0]

    @property
    def n(self) -> int:
        return self.d.shape[1]

    @property
    def n_valid(self) -> int:
        return int(self.valid_mask.sum())


@dataclass
class ChunkCache:
    """Forward intermediates of one chunk, for the backward pass."""

    token_ids: np.ndarray
    pooled: np.ndarray  # mean-pooled input (h,)
    output: np.ndarray  # tanh output (h,)


def encode_chunk_with_cache(params: EncoderParameters, token_ids: np.ndarray) -> tuple[np.ndarray, ChunkCache]:
    if len(token_ids) == 0:
        raise EmptyChunkError("cannot encode an empty chunk")
    pooled = params.token_embeddings[token_ids].mean(axis=0)
    out = np.tanh(params.projection @ pooled + params.proj_bias)
    return out, ChunkCache(np.asarray(token_ids, dtype=np.int64), pooled, out)


def encode_chunk(params: EncoderParameters, token_ids: np.ndarray) -> np.ndarray:
    """tanh(projection @ meanpool(embeddings) + bias)."""
    return encode_chunk_with_cache(params, token_ids)[0]


def encoder_backward(
    params: EncoderParameters,
    cache: ChunkCache,
    upstream: np.ndarray,
    out: EncoderGradients | None = None,
) -> EncoderGradients:
    """Exact gradients of one encoded chunk contracted with `upstream`.

    Accumulates into `out` when given (rows of absent tokens stay zero).
    """
    grads = out if out is not None else EncoderGradients.zeros_like(params)
    dt = upstream * (1.0 - cache.output * cache.output)
    grads.proj_bias += dt
    grads.projection += np.outer(dt, cache.pooled)
    dx = params.projection.T @ dt
    np.add.at(grads.token_embeddings, cache.token_ids, dx / len(cache.token_ids))
    return grads


@dataclass
class ReferenceEncoder:
    """Trainable chunk encoder: token vocabulary plus its parameters."""

    vocab: TokenVocabulary
    params: EncoderParameters

    @property
    def h(self) -> int:
        return self.params.h

    def chunk_ids(self, doc: ChunkedDocument) -> tuple[np.ndarray, np.ndarray]:
        """Flattened token ids of the valid chunks plus chunk offsets."""
        ids = [self.vocab.ids(ch) for ch in doc.valid_chunks()]
        offsets = np.zeros(len(ids) + 1, dtype=np.int64)
        np.cumsum([len(a) for a in ids], out=offsets[1:])
        flat = np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64)
        return flat, offsets


@dataclass
class DocumentCache:
    """Forward intermediates of a whole document (reference encoder)."""

    ids_flat: np.ndarray
    offsets: np.ndarray
    pooled: np.ndarray  # (n_valid, h)


def encode_document(encoder: ReferenceEncoder | EmbeddingStore, doc: ChunkedDocument) -> DocumentMatrix:
    """Assemble the document matrix: column j is the vector of chunk j."""
    if isinstance(encoder, EmbeddingStore):
        dmat = np.zeros((encoder.h, doc.n_chunks))
        for j, ok in enumerate(doc.valid_mask):
            if not ok:
                continue
            vec = encoder.vectors.get((doc.doc_id, j))
            if vec is None:
                raise MissingEmbeddingError(doc.doc_id, j)
            dmat[:, j] = vec.astype(np.float64)
        return DocumentMatrix(dmat, np.array(doc.valid_mask, dtype=bool))
    return encode_document_with_cache(encoder, doc)[0]


def encode_document_with_cache(
    encoder: ReferenceEncoder, doc: ChunkedDocument
) -> tuple[DocumentMatrix, DocumentCache]:
    for ch, ok in zip(doc.chunks, doc.valid_mask):
        if ok and not ch:
            raise EmptyChunkError(f"valid chunk of {doc.doc_id!r} is empty")
    ids_flat, offsets = encoder.chunk_ids(doc)
    p = encoder.params
    pooled, dmat = backend.kernels().encode_doc_fwd(
        p.token_embeddings, p.projection, p.proj_bias, ids_flat, offsets, doc.n_chunks
    )
    mask = np.array(doc.valid_mask, dtype=bool)
    return DocumentMatrix(dmat, mask), DocumentCache(ids_flat, offsets, pooled)


def encoder_backward_document(
    params: EncoderParameters,
    cache: DocumentCache,
    dmat: DocumentMatrix,
    d_dmat: np.ndarray,
    grads: EncoderGradients,
) -> None:
    """Accumulate document-level encoder gradients from upstream d_dmat (h, n)."""
    backend.kernels().encode_doc_bwd(
        params.projection,
        cache.ids_flat,
        cache.offsets,
        cache.pooled,
        dmat.d,
        d_dmat,
        grads.token_embeddings,
        grads.projection,
        grads.proj_bias,
    )
