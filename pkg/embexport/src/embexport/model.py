"""Pretrained-encoder loading and batched CLS-vector extraction.

The encoder re-tokenizes chunk text into subwords itself; whole-word chunk
boundaries from upstream are respected only in what text each chunk carries.
Over-long chunks are tail-truncated so the leading CLS and trailing SEP
positions survive. Inference runs in eval mode under no_grad, so a given
batching of a given input is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .errors import ModelLoadError

__all__ = ["EncoderHandle", "load_encoder", "embed_batch"]


@dataclass
class EncoderHandle:
    tokenizer: object
    model: object
    hidden: int


def load_encoder(identifier: str) -> EncoderHandle:
    """Resolve a model identifier (hub name or local directory) to a frozen encoder."""
    try:
        tokenizer = AutoTokenizer.from_pretrained(identifier)
        model = AutoModel.from_pretrained(identifier)
    except Exception as exc:  # transformers raises a zoo of types here
        raise ModelLoadError(identifier, str(exc)) from exc
    model.eval()
    hidden = int(model.config.hidden_size)
    return EncoderHandle(tokenizer=tokenizer, model=model, hidden=hidden)


def embed_batch(handle: EncoderHandle, texts: list[str], max_tokens: int) -> np.ndarray:
    """Final-layer vectors at the CLS position, one row per text, float32."""
    enc = handle.tokenizer(
        texts,
        padding=True,
        truncation=True,
        max_length=max_tokens,
        return_tensors="pt",
    )
    with torch.no_grad():
        out = handle.model(**enc)
    cls = out.last_hidden_state[:, 0, :]
    return np.ascontiguousarray(cls.numpy(), dtype=np.float32)
