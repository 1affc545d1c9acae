"""Throughput comparison of the compiled kernels against the numpy fallback.

Times the four hot kernels (document encode forward/backward, attention head
forward/backward) plus the Adam update and one full training epoch, on each
installed backend, and prints wall-clock medians with the speedup ratio.

Usage: python benchmarks/bench_backends.py [--docs 400] [--repeat 5]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from d2sattn import (
    ChunkPolicy,
    ReferenceEncoder,
    SacGradients,
    TokenVocabulary,
    TrainConfig,
    backend,
    fit,
    init_encoder_params,
    init_sac_params,
    sac_backward,
    sac_forward,
    synth_generate,
    vectorize,
)
from d2sattn.corpus import build_label_vocab
from d2sattn.encoder import (
    EncoderGradients,
    encode_document_with_cache,
    encoder_backward_document,
)
from d2sattn.trainer import AdamState, adam_step


def _median_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def build_workload(args):
    docs = synth_generate(args.docs, args.labels, (600, 1500), seed=0)
    policy = ChunkPolicy(words_per_chunk=args.words, max_chunks=args.chunks)
    vocab_codes = build_label_vocab(docs, args.labels)
    examples = [vectorize(d, vocab_codes, policy) for d in docs]
    rng = np.random.default_rng(0)
    token_vocab = TokenVocabulary.build(
        (ch for ex in examples for ch in ex.chunked.valid_chunks())
    )
    enc = init_encoder_params(token_vocab.size, args.h, rng)
    sac = init_sac_params(args.h, args.labels, rng)
    encoder = ReferenceEncoder(token_vocab, enc)
    return docs, policy, examples, encoder, enc, sac


def bench_backend(name: str, args, workload) -> dict[str, float]:
    backend.set_backend(name)
    docs, policy, examples, encoder, enc, sac = workload
    rng = np.random.default_rng(1)
    results: dict[str, float] = {}

    def encode_all():
        for ex in examples:
            encode_document_with_cache(encoder, ex.chunked)

    results["encode fwd"] = _median_time(encode_all, args.repeat)

    forwards = [encode_document_with_cache(encoder, ex.chunked) for ex in examples]
    upstreams = [rng.standard_normal(dm.d.shape) for dm, _ in forwards]

    def encode_bwd():
        grads = EncoderGradients.zeros_like(enc)
        for (dm, cache), up in zip(forwards, upstreams):
            encoder_backward_document(enc, cache, dm, up, grads)

    results["encode bwd"] = _median_time(encode_bwd, args.repeat)

    def head_fwd():
        for dm, _ in forwards:
            sac_forward(dm, sac)

    results["sac fwd"] = _median_time(head_fwd, args.repeat)

    caches = [sac_forward(dm, sac)[1] for dm, _ in forwards]
    dscores = [rng.standard_normal(args.labels) for _ in caches]

    def head_bwd():
        grads = SacGradients.zeros_like(sac)
        for cache, ds in zip(caches, dscores):
            sac_backward(cache, ds, grads=grads)

    results["sac bwd"] = _median_time(head_bwd, args.repeat)

    params = {
        "emb": enc.token_embeddings.copy(),
        "proj": enc.projection.copy(),
        "s": sac.s.copy(),
        "w": sac.w.copy(),
    }
    grads = {k: rng.standard_normal(v.shape) for k, v in params.items()}
    state = AdamState.zeros_like(params)
    config = TrainConfig(learning_rate=1e-3)

    def adam():
        adam_step(params, grads, state, config)

    results["adam step"] = _median_time(adam, args.repeat)

    def one_epoch():
        fit(
            docs,
            docs[: max(1, len(docs) // 10)],
            TrainConfig(learning_rate=1e-2, max_epochs=1, patience=1, seed=0),
            policy,
            labels_top_k=args.labels,
            hidden_dim=args.h,
        )

    results["train epoch"] = _median_time(one_epoch, max(1, args.repeat // 2))
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=400, help="synthetic documents (default 400)")
    parser.add_argument("--labels", type=int, default=10)
    parser.add_argument("--words", type=int, default=100, help="chunk width")
    parser.add_argument("--chunks", type=int, default=15, help="chunk slots")
    parser.add_argument("--h", type=int, default=64, help="hidden width")
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats (median reported)")
    args = parser.parse_args()

    names = backend.available_backends()
    print(f"backends: {', '.join(names)}")
    print(f"workload: {args.docs} docs, {args.chunks}x{args.words} chunks, h={args.h}, c={args.labels}")

    workload = build_workload(args)
    original = backend.active_name()
    try:
        timings = {name: bench_backend(name, args, workload) for name in names}
    finally:
        backend.set_backend(original)

    kernels = list(next(iter(timings.values())))
    header = f"{'kernel':<14}" + "".join(f"{name:>12}" for name in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print()
    print(header)
    for kernel in kernels:
        row = f"{kernel:<14}" + "".join(f"{timings[name][kernel] * 1e3:>10.1f}ms" for name in names)
        if len(names) == 2:
            slow, fast = timings[names[-1]][kernel], timings[names[0]][kernel]
            row += f"{slow / fast:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
