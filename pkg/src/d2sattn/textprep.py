"""Deterministic text normalization and document chunking.

Normalization lowercases, maps every non-alphanumeric character to a space,
splits on whitespace, and drops tokens that contain no letter (so "200" goes
away but "200cc" survives). Chunking turns a token list into a fixed-width
layout: either consecutive equal-width chunks (the long-document mode) or one
of the single-chunk truncation baselines (head / tail / head+tail).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import EmptyDocumentError

__all__ = ["ChunkPolicy", "ChunkedDocument", "normalize", "truncate_head", "chunk"]

_NON_ALNUM_RE = re.compile(r"[^a-z0-9]+")
_HAS_ALPHA_RE = re.compile(r"[a-z]")

POLICY_KINDS = ("d2s", "head", "tail", "head_tail")


def normalize(text: str) -> list[str]:
    """Lowercase, strip non-alphanumerics to spaces, split, drop letter-free tokens."""
    cleaned = _NON_ALNUM_RE.sub(" ", text.lower())
    return [tok for tok in cleaned.split() if _HAS_ALPHA_RE.search(tok)]


def truncate_head(tokens: list[str], limit: int) -> list[str]:
    """First `limit` tokens, order preserved."""
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    return tokens[:limit]


@dataclass(frozen=True)
class ChunkPolicy:
    """How a token list becomes chunks.

    kind "d2s" splits into up to `max_chunks` consecutive chunks of
    `words_per_chunk` tokens; the other kinds produce a single chunk from the
    front, the back, or the front+back of the document.
    """

    kind: str = "d2s"
    words_per_chunk: int = 100
    max_chunks: int = 25
    head_len: int = 510
    tail_len: int = 382

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "d2s" and (self.words_per_chunk < 1 or self.max_chunks < 1):
            raise ValueError("d2s requires words_per_chunk >= 1 and max_chunks >= 1")
        if self.kind in ("head", "head_tail") and self.head_len < 1:
            raise ValueError("head_len must be >= 1")
        if self.kind in ("tail", "head_tail") and self.tail_len < 1:
            raise ValueError("tail_len must be >= 1")
        if self.words_per_chunk < 1 or self.max_chunks < 1:
            raise ValueError("words_per_chunk and max_chunks must be >= 1")

    @property
    def budget(self) -> int:
        """Token budget of the fixed-width layout (words_per_chunk * max_chunks)."""
        return self.words_per_chunk * self.max_chunks


@dataclass
class ChunkedDocument:
    """Fixed-width chunk layout of one document.

    `chunks` holds one token list per slot; masked slots are empty lists and
    valid slots form a contiguous prefix. Only the last valid chunk may be
    shorter than the policy width.
    """

    doc_id: str
    chunks: list[list[str]] = field(repr=False)
    valid_mask: list[bool]
    words_per_chunk: int

    @property
    def n_chunks(self) -> int:
        return len(self.chunks)

    @property
    def n_valid(self) -> int:
        return sum(self.valid_mask)

    def valid_chunks(self) -> list[list[str]]:
        return [c for c, ok in zip(self.chunks, self.valid_mask) if ok]

    def check_invariants(self) -> None:
        assert len(self.valid_mask) == len(self.chunks)
        assert self.n_valid >= 1
        # valid entries are a contiguous prefix
        assert self.valid_mask == [True] * self.n_valid + [False] * (self.n_chunks - self.n_valid)
        for c, ok in zip(self.chunks, self.valid_mask):
            assert bool(c) == ok
        assert sum(len(c) for c in self.chunks) <= self.words_per_chunk * self.n_chunks


def chunk(tokens: list[str], policy: ChunkPolicy, doc_id: str = "") -> ChunkedDocument:
    """Apply a chunk policy to a non-empty token list."""
    if not tokens:
        raise EmptyDocumentError(f"document {doc_id!r} has no tokens")

    if policy.kind == "d2s":
        w, n = policy.words_per_chunk, policy.max_chunks
        head = tokens[: w * n]
        k = min(n, math.ceil(len(head) / w))
        chunks = [head[j * w : (j + 1) * w] for j in range(k)]
        chunks += [[] for _ in range(n - k)]
        mask = [True] * k + [False] * (n - k)
        return ChunkedDocument(doc_id, chunks, mask, w)

    if policy.kind == "head":
        piece = tokens[: policy.head_len]
        width = policy.head_len
    elif policy.kind == "tail":
        piece = tokens[-policy.tail_len :]
        width = policy.tail_len
    else:  # head_tail
        width = policy.head_len + policy.tail_len
        if len(tokens) < width:
            piece = list(tokens)  # whole document once, no duplication
        else:
            piece = tokens[: policy.head_len] + tokens[len(tokens) - policy.tail_len :]
    return ChunkedDocument(doc_id, [piece], [True], width)
