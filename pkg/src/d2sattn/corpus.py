"""Corpus ingestion, label vocabulary, splitting, and synthetic data.

The on-disk corpus format is JSONL: one object per line with fields
`id` (string), `text` (string), `codes` (array of strings).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TypeVar

import numpy as np

from .errors import DuplicateIdError, EmptyDocumentError, NoLabelsError, ParseError
from .textprep import ChunkPolicy, ChunkedDocument, chunk, normalize, truncate_head

__all__ = [
    "RawDocument",
    "LabelVocabulary",
    "LabeledExample",
    "ingest",
    "write_corpus",
    "build_label_vocab",
    "split",
    "synth_generate",
    "vectorize",
]

T = TypeVar("T")


@dataclass
class RawDocument:
    doc_id: str
    text: str
    codes: set[str]


@dataclass
class LabelVocabulary:
    """Label codes ordered by corpus frequency (descending, ties lexicographic)."""

    labels: list[str]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {code: i for i, code in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ValueError("duplicate codes in label vocabulary")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class LabeledExample:
    doc_id: str
    chunked: ChunkedDocument
    targets: np.ndarray  # (c,) bool


def ingest(path: str | Path) -> Iterator[RawDocument]:
    """Yield documents from a JSONL corpus file in order; reject duplicate ids."""
    path = Path(path)
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ParseError(str(path), lineno, "line is not a JSON object")
            try:
                doc_id, text, codes = obj["id"], obj["text"], obj["codes"]
            except KeyError as exc:
                raise ParseError(str(path), lineno, f"missing field {exc.args[0]!r}") from exc
            if not isinstance(doc_id, str) or not isinstance(text, str) or not isinstance(codes, list):
                raise ParseError(str(path), lineno, "fields must be id:str, text:str, codes:list")
            if doc_id in seen:
                raise DuplicateIdError(doc_id, lineno)
            seen.add(doc_id)
            yield RawDocument(doc_id, text, set(codes))


def write_corpus(docs: Iterable[RawDocument], path: str | Path) -> None:
    """Write documents as JSONL (codes sorted so output is deterministic)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.doc_id, "text": doc.text, "codes": sorted(doc.codes)}))
            fh.write("\n")


def build_label_vocab(docs: Iterable[RawDocument], k: int) -> LabelVocabulary:
    """The k most frequent codes by document occurrence; ties break lexicographically."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(set(doc.codes))
    if not counts:
        raise NoLabelsError("no document carries any code")
    ordered = sorted(counts, key=lambda code: (-counts[code], code))
    return LabelVocabulary(ordered[:k])


def split(items: Sequence[T], ratios: tuple[float, float, float], seed: int) -> tuple[list[T], list[T], list[T]]:
    """Deterministic shuffle + floor partition into (train, validation, test)."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    if any(r < 0 for r in ratios):
        raise ValueError("ratios must be non-negative")
    n = len(items)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(n * ratios[0])
    n_val = int(n * ratios[1])
    shuffled = [items[i] for i in order]
    return (
        shuffled[:n_train],
        shuffled[n_train : n_train + n_val],
        shuffled[n_train + n_val :],
    )


_FILLER_TYPES = 200  # filler tokens are tok0..tok199; markers are kw0..kwN


def synth_generate(
    n_docs: int,
    n_labels: int,
    length_range: tuple[int, int],
    planting: str = "uniform",
    seed: int = 0,
    prefix: int = 510,
    plant_prob: float = 0.3,
) -> list[RawDocument]:
    """Generate a synthetic labeled corpus.

    Each document is filler tokens; independently per label (prob
    `plant_prob`) its marker token "kw<k>" replaces one filler token, at a
    position drawn uniformly ("uniform") or uniformly at indices >= `prefix`
    ("beyond_prefix"). Codes are exactly the planted labels.
    """
    if n_labels < 1:
        raise ValueError("n_labels must be >= 1")
    lo, hi = length_range
    if lo < 1 or hi < lo:
        raise ValueError(f"bad length_range {length_range}")
    if planting not in ("uniform", "beyond_prefix"):
        raise ValueError(f"unknown planting {planting!r}")

    rng = np.random.default_rng(seed)
    docs = []
    for d in range(n_docs):
        length = int(rng.integers(lo, hi + 1))
        tokens = [f"tok{v}" for v in rng.integers(0, _FILLER_TYPES, size=length)]
        planted = [k for k in range(n_labels) if rng.random() < plant_prob]
        pos_lo = 0 if planting == "uniform" else min(prefix, length - 1)
        used: set[int] = set()
        for k in planted:
            pos = int(rng.integers(pos_lo, length))
            while pos in used:  # keep every marker visible
                pos = int(rng.integers(pos_lo, length))
            used.add(pos)
            tokens[pos] = f"kw{k}"
        docs.append(RawDocument(f"synth{d:05d}", " ".join(tokens), {f"kw{k}" for k in planted}))
    return docs


def vectorize(
    doc: RawDocument,
    vocab: LabelVocabulary,
    policy: ChunkPolicy,
) -> LabeledExample:
    """Normalize, head-truncate to the policy budget, chunk, and binarize codes."""
    tokens = normalize(doc.text)
    if not tokens:
        raise EmptyDocumentError(f"document {doc.doc_id!r} is empty after normalization")
    chunked = chunk(truncate_head(tokens, policy.budget), policy, doc_id=doc.doc_id)
    targets = np.array([code in doc.codes for code in vocab.labels], dtype=bool)
    return LabeledExample(doc.doc_id, chunked, targets)
