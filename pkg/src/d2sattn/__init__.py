"""Long-document multi-label text classification.

Documents are normalized, head-truncated, and split into fixed-width chunks;
each chunk is encoded to one vector; a per-label attention head weighs the
chunk vectors and scores every label independently. Training, evaluation
metrics (macro/micro P/R/F1), a JSONL corpus pipeline, and a binary
embedding-interchange format are included. Hot kernels run on a compiled
extension when built, with a numpy fallback selected at import.
"""

from .backend import active_name, available_backends, set_backend
from .corpus import (
    LabeledExample,
    LabelVocabulary,
    RawDocument,
    build_label_vocab,
    ingest,
    split,
    synth_generate,
    vectorize,
    write_corpus,
)
from .encoder import (
    DocumentMatrix,
    EncoderGradients,
    EncoderParameters,
    ReferenceEncoder,
    TokenVocabulary,
    encode_chunk,
    encode_document,
    encoder_backward,
    init_encoder_params,
)
from .metrics import ConfusionCounts, MetricsReport, compute_report, confusion, macro_prf, micro_prf
from .sac import (
    AttentionWeights,
    LabelVectors,
    SacGradients,
    SacParameters,
    ScoreVector,
    attention,
    init_sac_params,
    label_vectors,
    sac_backward,
    sac_forward,
    score,
)
from .store import EmbeddingStore, read_store, write_store
from .textprep import ChunkPolicy, ChunkedDocument, chunk, normalize, truncate_head
from .trainer import (
    AdamState,
    Checkpoint,
    TrainConfig,
    adam_step,
    bce_loss,
    evaluate,
    fit,
    load_checkpoint,
    predict,
    save_checkpoint,
)

__version__ = "0.1.0"
