"""Sequence attention classifier head.

Per label: a masked softmax over the valid chunk columns of the document
matrix yields attention weights, the attention-weighted sum of chunk vectors
yields a label representation vector, and an independent linear layer plus
sigmoid yields the label score. Predictions threshold strictly at 0.5.

`attention` / `label_vectors` / `score` are the readable single-step
implementations; `sac_forward` / `sac_backward` run the fused kernels used in
training and are pinned equal to the composed steps by tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .encoder import DocumentMatrix
from .errors import NoValidChunksError, ShapeMismatchError

__all__ = [
    "SacParameters",
    "SacGradients",
    "AttentionWeights",
    "LabelVectors",
    "ScoreVector",
    "SacCache",
    "init_sac_params",
    "attention",
    "label_vectors",
    "score",
    "sac_forward",
    "sac_backward",
]


@dataclass
class SacParameters:
    s: np.ndarray  # (h, c) attention matrix, one column per label
    w: np.ndarray  # (c, h) per-label linear weights
    bias: np.ndarray  # (c,)

    @property
    def h(self) -> int:
        return self.s.shape[0]

    @property
    def c(self) -> int:
        return self.s.shape[1]


@dataclass
class SacGradients:
    s: np.ndarray
    w: np.ndarray
    bias: np.ndarray

    @classmethod
    def zeros_like(cls, params: SacParameters) -> "SacGradients":
        return cls(np.zeros_like(params.s), np.zeros_like(params.w), np.zeros_like(params.bias))


def init_sac_params(h: int, c: int, rng: np.random.Generator) -> SacParameters:
    """S and W uniform in [-1/sqrt(h), +1/sqrt(h)], bias zero."""
    bound = 1.0 / np.sqrt(h)
    return SacParameters(
        s=rng.uniform(-bound, bound, size=(h, c)),
        w=rng.uniform(-bound, bound, size=(c, h)),
        bias=np.zeros(c),
    )


@dataclass
class AttentionWeights:
    alpha: np.ndarray  # (c, n); each row sums to 1 over valid columns
    valid_mask: np.ndarray  # (n,) bool


@dataclass
class LabelVectors:
    l: np.ndarray  # (c, h); row i is the representation vector of label i


@dataclass
class ScoreVector:
    scores: np.ndarray  # (c,) sigmoid outputs
    predictions: np.ndarray  # (c,) bool; strictly score > 0.5


@dataclass
class SacCache:
    """Forward intermediates (and the parameters used) for the backward pass."""

    params: SacParameters
    dmat: np.ndarray
    valid_mask: np.ndarray
    n_valid: int
    logits: np.ndarray  # (n, c) tanh attention logits, zero at masked rows
    alpha: np.ndarray  # (c, n)
    lvec: np.ndarray  # (c, h)
    scores: np.ndarray  # (c,)


def _check_width(d: DocumentMatrix, params: SacParameters) -> int:
    if d.h != params.h:
        raise ShapeMismatchError(f"document width {d.h} != parameter width {params.h}")
    k = d.n_valid
    if k == 0:
        raise NoValidChunksError("document matrix has no valid chunks")
    return k


def attention(d: DocumentMatrix, params: SacParameters) -> AttentionWeights:
    """Per-label masked softmax over tanh(D^T S); masked columns get exactly 0."""
    k = _check_width(d, params)
    logits = np.tanh(d.d[:, :k].T @ params.s)  # (k, c)
    shifted = np.exp(logits - logits.max(axis=0))
    alpha = np.zeros((params.c, d.n))
    alpha[:, :k] = (shifted / shifted.sum(axis=0)).T
    return AttentionWeights(alpha, d.valid_mask.copy())


def label_vectors(weights: AttentionWeights, d: DocumentMatrix) -> LabelVectors:
    """Row i: attention-weighted sum of valid chunk columns."""
    if weights.alpha.shape[1] != d.n:
        raise ShapeMismatchError(f"alpha has {weights.alpha.shape[1]} columns for {d.n} chunks")
    return LabelVectors(weights.alpha @ d.d.T)


def score(l: LabelVectors, params: SacParameters) -> ScoreVector:
    """Per-label linear + sigmoid; prediction true iff score strictly exceeds 0.5."""
    if l.l.shape != params.w.shape:
        raise ShapeMismatchError(f"label vectors {l.l.shape} vs weights {params.w.shape}")
    z = (params.w * l.l).sum(axis=1) + params.bias
    scores = np.empty_like(z)
    pos = z >= 0
    scores[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    scores[~pos] = ez / (1.0 + ez)
    return ScoreVector(scores, scores > 0.5)


def sac_forward(d: DocumentMatrix, params: SacParameters) -> tuple[ScoreVector, SacCache]:
    """Fused attention -> label vectors -> scores."""
    k = _check_width(d, params)
    logits, alpha, lvec, scores = backend.kernels().sac_fwd(d.d, k, params.s, params.w, params.bias)
    cache = SacCache(params, d.d, d.valid_mask, k, logits, alpha, lvec, scores)
    return ScoreVector(scores, scores > 0.5), cache


def sac_backward(
    cache: SacCache,
    dloss_dscores: np.ndarray,
    grads: SacGradients | None = None,
) -> tuple[SacGradients, np.ndarray]:
    """Exact gradients w.r.t. S, W, bias and the document matrix.

    Accumulates into `grads` when given. Masked columns of the returned
    d_dmat are exactly zero.
    """
    params = cache.params
    if grads is None:
        grads = SacGradients.zeros_like(params)
    d_dmat = backend.kernels().sac_bwd(
        cache.dmat,
        cache.n_valid,
        params.s,
        params.w,
        cache.logits,
        cache.alpha,
        cache.lvec,
        cache.scores,
        np.asarray(dloss_dscores, dtype=np.float64),
        grads.s,
        grads.w,
        grads.bias,
    )
    return grads, d_dmat
