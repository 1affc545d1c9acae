"""Training loop: binary cross entropy, Adam, validation-based selection.

The loss is the mean over labels per document and the mean over documents per
batch. Within a batch gradients are summed in document order, so a fixed seed
reproduces the training trajectory bitwise. A checkpoint holds everything
needed to score new documents: vocabularies, parameters, policy, and config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import backend
from ._util import ordered_map
from .corpus import LabelVocabulary, LabeledExample, RawDocument, build_label_vocab, vectorize
from .encoder import (
    EncoderGradients,
    EncoderParameters,
    ReferenceEncoder,
    TokenVocabulary,
    encode_document,
    encode_document_with_cache,
    encoder_backward_document,
    init_encoder_params,
)
from .errors import (
    CheckpointError,
    EmptyDatasetError,
    EmptyTrainingSetError,
    SchemaVersionError,
    ShapeMismatchError,
)
from .metrics import MetricsReport, compute_report, micro_prf, confusion
from .sac import SacGradients, SacParameters, init_sac_params, sac_backward, sac_forward
from .store import EmbeddingStore
from .textprep import ChunkPolicy

__all__ = [
    "TrainConfig",
    "AdamState",
    "Checkpoint",
    "bce_loss",
    "adam_step",
    "fit",
    "evaluate",
    "predict",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_SCHEMA_VERSION",
]

CHECKPOINT_SCHEMA_VERSION = 1
_PROB_FLOOR = 1e-12


@dataclass
class TrainConfig:
    learning_rate: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 16
    max_epochs: int = 30
    patience: int = 5
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class AdamState:
    step: int
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            step=0,
            first_moment={k: np.zeros_like(v) for k, v in params.items()},
            second_moment={k: np.zeros_like(v) for k, v in params.items()},
        )


def bce_loss(scores: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean-over-labels binary cross entropy and its gradient w.r.t. scores.

    Probabilities are clamped to [1e-12, 1 - 1e-12] so log never sees 0.
    """
    c = len(scores)
    p = np.clip(scores, _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    y = np.asarray(targets, dtype=np.float64)
    loss = float(-(y * np.log(p) + (1.0 - y) * np.log1p(-p)).mean())
    dscores = -(y / p - (1.0 - y) / (1.0 - p)) / c
    return loss, dscores


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> AdamState:
    """Standard Adam with bias correction; updates params and state in place."""
    if params.keys() != grads.keys():
        raise ShapeMismatchError("params and grads disagree on parameter names")
    state.step += 1
    bc1 = 1.0 - config.beta1**state.step
    bc2 = 1.0 - config.beta2**state.step
    kern = backend.kernels()
    for name, p in params.items():
        kern.adam_update(
            p.ravel(),
            grads[name].ravel(),
            state.first_moment[name].ravel(),
            state.second_moment[name].ravel(),
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.epsilon,
            bc1,
            bc2,
        )
    return state


@dataclass
class Checkpoint:
    config: TrainConfig
    policy: ChunkPolicy
    encoder_mode: str  # "reference" | "store"
    label_vocab: LabelVocabulary
    token_vocab: TokenVocabulary | None
    encoder_params: EncoderParameters | None
    sac_params: SacParameters
    best_val_micro_f1: float
    epoch: int

    @property
    def n_labels(self) -> int:
        return len(self.label_vocab)


@dataclass
class _Model:
    """Live training state: encoder (optional) + attention head."""

    encoder: ReferenceEncoder | None
    store: EmbeddingStore | None
    sac: SacParameters

    def param_dict(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        if self.encoder is not None:
            p = self.encoder.params
            out["encoder.token_embeddings"] = p.token_embeddings
            out["encoder.projection"] = p.projection
            out["encoder.proj_bias"] = p.proj_bias
        out["sac.s"] = self.sac.s
        out["sac.w"] = self.sac.w
        out["sac.bias"] = self.sac.bias
        return out

    def forward(self, ex: LabeledExample):
        if self.encoder is not None:
            dm, doc_cache = encode_document_with_cache(self.encoder, ex.chunked)
        else:
            dm, doc_cache = encode_document(self.store, ex.chunked), None
        scorevec, cache = sac_forward(dm, self.sac)
        return dm, doc_cache, scorevec, cache


def _vectorize_all(
    docs: Sequence[RawDocument],
    vocab: LabelVocabulary,
    policy: ChunkPolicy,
    keep_unlabeled: bool,
) -> list[LabeledExample]:
    examples = [vectorize(d, vocab, policy) for d in docs]
    if not keep_unlabeled:
        examples = [ex for ex in examples if ex.targets.any()]
    return examples


def fit(
    train_docs: Sequence[RawDocument],
    val_docs: Sequence[RawDocument],
    config: TrainConfig,
    policy: ChunkPolicy,
    encoder_mode: str = "reference",
    store: EmbeddingStore | None = None,
    labels_top_k: int = 50,
    hidden_dim: int = 64,
    vocab_cap: int = 20000,
    keep_unlabeled: bool = True,
    log: list[dict] | None = None,
) -> Checkpoint:
    """Train on the train split, select the epoch with best validation micro-F1.

    Stops after `patience` epochs without improvement or at `max_epochs`.
    Vocabularies come from the train split only. `log` (if given) collects one
    dict per epoch: epoch, train_loss, val precision/recall/micro-F1.
    """
    if len(train_docs) == 0:
        raise EmptyTrainingSetError("train split is empty")
    if encoder_mode not in ("reference", "store"):
        raise ValueError(f"unknown encoder mode {encoder_mode!r}")
    if encoder_mode == "store" and store is None:
        raise ValueError("store mode needs an EmbeddingStore")

    label_vocab = build_label_vocab(train_docs, labels_top_k)
    train = _vectorize_all(train_docs, label_vocab, policy, keep_unlabeled)
    val = _vectorize_all(val_docs, label_vocab, policy, keep_unlabeled)
    if not train:
        raise EmptyTrainingSetError("train split is empty after filtering")
    if not val:
        raise EmptyDatasetError("validation split is empty; cannot select a model")

    rng = np.random.default_rng(config.seed)
    c = len(label_vocab)
    if encoder_mode == "reference":
        token_vocab = TokenVocabulary.build(
            (ch for ex in train for ch in ex.chunked.valid_chunks()), cap=vocab_cap
        )
        enc_params = init_encoder_params(token_vocab.size, hidden_dim, rng)
        model = _Model(ReferenceEncoder(token_vocab, enc_params), None, init_sac_params(hidden_dim, c, rng))
    else:
        token_vocab = None
        model = _Model(None, store, init_sac_params(store.h, c, rng))

    params = model.param_dict()
    state = AdamState.zeros_like(params)
    best_f1 = -1.0
    best_epoch = 0
    best_params = {k: v.copy() for k, v in params.items()}
    since_best = 0

    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(len(train))
        epoch_loss = 0.0
        for start in range(0, len(perm), config.batch_size):
            batch = perm[start : start + config.batch_size]
            enc_grads = (
                EncoderGradients.zeros_like(model.encoder.params) if model.encoder is not None else None
            )
            sac_grads = SacGradients.zeros_like(model.sac)
            for idx in batch:
                ex = train[idx]
                dm, doc_cache, _, cache = model.forward(ex)
                loss, dscores = bce_loss(cache.scores, ex.targets)
                epoch_loss += loss
                _, d_dmat = sac_backward(cache, dscores, grads=sac_grads)
                if model.encoder is not None:
                    encoder_backward_document(model.encoder.params, doc_cache, dm, d_dmat, enc_grads)
            scale = 1.0 / len(batch)
            grad_dict = {"sac.s": sac_grads.s, "sac.w": sac_grads.w, "sac.bias": sac_grads.bias}
            if enc_grads is not None:
                grad_dict = {
                    "encoder.token_embeddings": enc_grads.token_embeddings,
                    "encoder.projection": enc_grads.projection,
                    "encoder.proj_bias": enc_grads.proj_bias,
                    **grad_dict,
                }
            for g in grad_dict.values():
                g *= scale
            adam_step(params, grad_dict, state, config)

        train_loss = epoch_loss / len(train)
        val_p, val_r, val_f1 = _validate(model, val, config.threshold)
        if log is not None:
            log.append(
                {
                    "epoch": epoch,
                    "train_loss": train_loss,
                    "val_precision": val_p,
                    "val_recall": val_r,
                    "val_micro_f1": val_f1,
                }
            )
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    for k, v in params.items():  # restore the selected epoch
        v[:] = best_params[k]

    return Checkpoint(
        config=replace(config),
        policy=policy,
        encoder_mode=encoder_mode,
        label_vocab=label_vocab,
        token_vocab=token_vocab,
        encoder_params=model.encoder.params if model.encoder is not None else None,
        sac_params=model.sac,
        best_val_micro_f1=best_f1,
        epoch=best_epoch,
    )


def _validate(model: _Model, examples: list[LabeledExample], threshold: float) -> tuple[float, float, float]:
    preds = np.zeros((len(examples), model.sac.c), dtype=bool)
    targs = np.zeros_like(preds)
    for i, ex in enumerate(examples):
        _, _, scorevec, _ = model.forward(ex)
        preds[i] = scorevec.scores > threshold
        targs[i] = ex.targets
    return micro_prf(confusion(preds, targs))


def _model_from_checkpoint(ckpt: Checkpoint, store: EmbeddingStore | None) -> _Model:
    if ckpt.encoder_mode == "reference":
        if ckpt.encoder_params is None or ckpt.token_vocab is None:
            raise CheckpointError("reference checkpoint lacks encoder parameters")
        return _Model(ReferenceEncoder(ckpt.token_vocab, ckpt.encoder_params), None, ckpt.sac_params)
    if store is None:
        raise ValueError("store-mode checkpoint needs an EmbeddingStore to run")
    if store.h != ckpt.sac_params.h:
        raise ShapeMismatchError(f"store width {store.h} != checkpoint width {ckpt.sac_params.h}")
    return _Model(None, store, ckpt.sac_params)


def evaluate(ckpt: Checkpoint, docs: Sequence[RawDocument], store: EmbeddingStore | None = None) -> MetricsReport:
    """Score every document and aggregate exact multi-label metrics."""
    if len(docs) == 0:
        raise EmptyDatasetError("nothing to evaluate")
    model = _model_from_checkpoint(ckpt, store)
    examples = [vectorize(d, ckpt.label_vocab, ckpt.policy) for d in docs]

    def run(ex: LabeledExample) -> np.ndarray:
        _, _, scorevec, _ = model.forward(ex)
        return scorevec.scores

    scores = ordered_map(run, examples)
    preds = np.stack([s > ckpt.config.threshold for s in scores])
    targs = np.stack([ex.targets for ex in examples])
    return compute_report(preds, targs)


def predict(
    ckpt: Checkpoint, docs: Sequence[RawDocument], store: EmbeddingStore | None = None
) -> list[dict]:
    """Per-document predicted codes with scores and per-chunk attention weights.

    Attention rows (over valid chunks) are emitted for the predicted codes;
    scores are emitted for every label.
    """
    model = _model_from_checkpoint(ckpt, store)
    labels = ckpt.label_vocab.labels

    def run(doc: RawDocument) -> dict:
        ex = vectorize(doc, ckpt.label_vocab, ckpt.policy)
        _, _, scorevec, cache = model.forward(ex)
        on = np.flatnonzero(scorevec.scores > ckpt.config.threshold)
        on = on[np.argsort(-scorevec.scores[on], kind="stable")]
        return {
            "doc_id": doc.doc_id,
            "codes": [labels[i] for i in on],
            "scores": {labels[i]: float(scorevec.scores[i]) for i in range(len(labels))},
            "attention": {labels[i]: cache.alpha[i, : cache.n_valid].tolist() for i in on},
        }

    return ordered_map(run, list(docs))


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """JSON checkpoint; float arrays keep full 64-bit precision via repr round-trip."""
    doc = {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "encoder_mode": ckpt.encoder_mode,
        "best_val_micro_f1": ckpt.best_val_micro_f1,
        "epoch": ckpt.epoch,
        "config": ckpt.config.__dict__,
        "policy": ckpt.policy.__dict__,
        "label_vocab": ckpt.label_vocab.labels,
        "token_vocab": ckpt.token_vocab.tokens if ckpt.token_vocab is not None else None,
        "encoder_params": (
            None
            if ckpt.encoder_params is None
            else {
                "token_embeddings": ckpt.encoder_params.token_embeddings.tolist(),
                "projection": ckpt.encoder_params.projection.tolist(),
                "proj_bias": ckpt.encoder_params.proj_bias.tolist(),
            }
        ),
        "sac_params": {
            "s": ckpt.sac_params.s.tolist(),
            "w": ckpt.sac_params.w.tolist(),
            "bias": ckpt.sac_params.bias.tolist(),
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"unreadable checkpoint: {exc.msg}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise SchemaVersionError("checkpoint lacks a schema_version field")
    if doc["schema_version"] != CHECKPOINT_SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema_version {doc['schema_version']!r}")
    try:
        enc = doc["encoder_params"]
        encoder_params = (
            None
            if enc is None
            else EncoderParameters(
                token_embeddings=np.array(enc["token_embeddings"], dtype=np.float64),
                projection=np.array(enc["projection"], dtype=np.float64),
                proj_bias=np.array(enc["proj_bias"], dtype=np.float64),
            )
        )
        sac = doc["sac_params"]
        return Checkpoint(
            config=TrainConfig(**doc["config"]),
            policy=ChunkPolicy(**doc["policy"]),
            encoder_mode=doc["encoder_mode"],
            label_vocab=LabelVocabulary(list(doc["label_vocab"])),
            token_vocab=None if doc["token_vocab"] is None else TokenVocabulary(list(doc["token_vocab"])),
            encoder_params=encoder_params,
            sac_params=SacParameters(
                s=np.array(sac["s"], dtype=np.float64),
                w=np.array(sac["w"], dtype=np.float64),
                bias=np.array(sac["bias"], dtype=np.float64),
            ),
            best_val_micro_f1=float(doc["best_val_micro_f1"]),
            epoch=int(doc["epoch"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
