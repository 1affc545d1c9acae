"""Shared fixture: a tiny randomly initialized encoder saved to disk once per session."""

from __future__ import annotations

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast
from transformers.utils import logging as hf_logging

hf_logging.disable_progress_bar()

# wordpiece vocabulary: the five standard specials, whole-word tokens the
# tests reference by name, digit continuation pieces, and single letters
VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + [f"tok{i}" for i in range(30)]
    + [f"kw{i}" for i in range(5)]
    + ["##" + d for d in "0123456789"]
    + list("abcdefghij")
)

HIDDEN = 32


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory) -> str:
    out = tmp_path_factory.mktemp("tiny-encoder")
    tokenizer = BertTokenizerFast(vocab={tok: i for i, tok in enumerate(VOCAB)}, do_lower_case=True)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=HIDDEN,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)
