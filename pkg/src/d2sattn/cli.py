"""Command-line surface: prep, synth, train, eval, predict, compare.

Option precedence is flags > --config file (TOML or JSON, keys named like the
long flags with underscores) > built-in defaults. Exit codes: 0 success,
1 usage error, 2 data error. D2S_THREADS caps scoring parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .corpus import ingest, split, synth_generate, write_corpus
from .errors import D2sError
from .metrics import MetricsReport
from .store import read_store
from .textprep import POLICY_KINDS, ChunkPolicy, chunk, normalize, truncate_head
from .trainer import TrainConfig, evaluate, fit, load_checkpoint, predict, save_checkpoint

__all__ = ["main", "build_parser", "emit_report"]

SPLIT_RATIOS = (0.8, 0.1, 0.1)

# per-mode learning-rate defaults: the trainable encoder learns from scratch,
# precomputed embeddings only train the attention head
LR_REFERENCE = 1e-2
LR_STORE = 1e-5

_DEFAULTS = {
    "policy": "d2s",
    "words_per_chunk": 100,
    "max_chunks": 25,
    "head_len": 510,
    "tail_len": 382,
    "labels_top_k": 50,
    "seed": 0,
    "lr": None,  # resolved per encoder mode
    "batch_size": 16,
    "epochs": 30,
    "patience": 5,
    "hidden_dim": 64,
    "vocab_cap": 20000,
    "keep_unlabeled": True,
    "threshold": 0.5,
}


class UsageError(Exception):
    """Bad invocation (missing/invalid options); maps to exit code 1."""


def _add_policy_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--policy", choices=POLICY_KINDS, default=None, help="chunking policy (default d2s)")
    parser.add_argument("--words-per-chunk", type=int, default=None, help="chunk width (default 100)")
    parser.add_argument("--max-chunks", type=int, default=None, help="chunk count (default 25)")
    parser.add_argument("--head-len", type=int, default=None, help="head baseline length (default 510)")
    parser.add_argument("--tail-len", type=int, default=None, help="tail baseline length (default 382)")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--labels-top-k", type=int, default=None, help="label vocabulary size (default 50)")
    parser.add_argument("--seed", type=int, default=None, help="split/init/shuffle seed (default 0)")
    parser.add_argument("--lr", type=float, default=None, help="learning rate (default 1e-2, or 1e-5 with --embeddings)")
    parser.add_argument("--batch-size", type=int, default=None, help="mini-batch size (default 16)")
    parser.add_argument("--epochs", type=int, default=None, help="max epochs (default 30)")
    parser.add_argument("--patience", type=int, default=None, help="early-stop patience (default 5)")
    parser.add_argument("--hidden-dim", type=int, default=None, help="reference encoder width (default 64)")
    parser.add_argument("--vocab-cap", type=int, default=None, help="token vocabulary cap (default 20000)")
    parser.add_argument(
        "--keep-unlabeled",
        choices=["true", "false"],
        default=None,
        help="keep documents with no in-vocabulary code (default true)",
    )
    parser.add_argument("--embeddings", default=None, help="precomputed chunk vectors (store mode)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2sattn",
        description="Long-document multi-label classification: chunked encoding with per-label attention.",
        epilog="Set D2S_THREADS to parallelize scoring (training stays single-threaded).",
    )
    sub = parser.add_subparsers(dest="command", metavar="{prep,synth,train,eval,predict,compare}")

    prep = sub.add_parser("prep", help="normalize and chunk a corpus into per-chunk JSONL")
    prep.add_argument("--corpus", default=None, help="input corpus JSONL")
    prep.add_argument("--out", default=None, help="output chunked JSONL")
    prep.add_argument("--config", default=None)
    _add_policy_flags(prep)

    synth = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    synth.add_argument("--out", default=None, help="output corpus JSONL")
    synth.add_argument("--docs", type=int, default=None, help="document count (default 200)")
    synth.add_argument("--labels", type=int, default=None, help="label count (default 5)")
    synth.add_argument("--min-len", type=int, default=None, help="min tokens per doc (default 100)")
    synth.add_argument("--max-len", type=int, default=None, help="max tokens per doc (default 400)")
    synth.add_argument("--planting", choices=["uniform", "beyond_prefix"], default=None)
    synth.add_argument("--prefix", type=int, default=None, help="beyond_prefix boundary (default 510)")
    synth.add_argument("--plant-prob", type=float, default=None, help="per-label planting probability (default 0.3)")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--config", default=None)

    train = sub.add_parser("train", help="split 8:1:1, train, write checkpoint and log")
    train.add_argument("--corpus", default=None, help="labeled corpus JSONL")
    train.add_argument("--checkpoint", default=None, help="output checkpoint JSON")
    train.add_argument("--log", default=None, help="training log path (default <checkpoint>.log)")
    train.add_argument("--save-splits", default=None, metavar="DIR", help="write train/val/test JSONL here")
    train.add_argument("--config", default=None)
    _add_policy_flags(train)
    _add_train_flags(train)

    ev = sub.add_parser("eval", help="score a corpus with a checkpoint and write a metrics report")
    ev.add_argument("--checkpoint", default=None)
    ev.add_argument("--corpus", default=None)
    ev.add_argument("--report", default=None, help="metrics JSON path (a .txt table is written beside it)")
    ev.add_argument("--embeddings", default=None)
    ev.add_argument("--config", default=None)

    pred = sub.add_parser("predict", help="emit predicted codes with scores and attention weights")
    pred.add_argument("--checkpoint", default=None)
    pred.add_argument("--corpus", default=None)
    pred.add_argument("--out", default=None, help="output JSONL (stdout when omitted)")
    pred.add_argument("--embeddings", default=None)
    pred.add_argument("--config", default=None)

    cmp_ = sub.add_parser("compare", help="train all four chunk policies on one shared split")
    cmp_.add_argument("--corpus", default=None)
    cmp_.add_argument("--report", default=None, help="comparison JSON path")
    cmp_.add_argument("--config", default=None)
    _add_policy_flags(cmp_)
    _add_train_flags(cmp_)

    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        if p.suffix == ".toml":
            with p.open("rb") as fh:
                return tomllib.load(fh)
        return json.loads(p.read_text(encoding="utf-8"))
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


class _Options:
    """Flags merged over config-file values merged over defaults."""

    def __init__(self, args: argparse.Namespace, defaults: dict):
        self._flags = vars(args)
        self._config = _load_config(self._flags.get("config"))
        self._defaults = defaults

    def get(self, key: str):
        value = self._flags.get(key)
        if value is None:
            value = self._config.get(key, self._defaults.get(key))
        return value

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise UsageError(f"missing required option --{key.replace('_', '-')}")
        return value

    def boolean(self, key: str) -> bool:
        value = self.get(key)
        if isinstance(value, str):
            return value == "true"
        return bool(value)


def _policy_from(opts: _Options) -> ChunkPolicy:
    return ChunkPolicy(
        kind=opts.get("policy"),
        words_per_chunk=int(opts.get("words_per_chunk")),
        max_chunks=int(opts.get("max_chunks")),
        head_len=int(opts.get("head_len")),
        tail_len=int(opts.get("tail_len")),
    )


def _train_config_from(opts: _Options, store_mode: bool) -> TrainConfig:
    lr = opts.get("lr")
    if lr is None:
        lr = LR_STORE if store_mode else LR_REFERENCE
    return TrainConfig(
        learning_rate=float(lr),
        batch_size=int(opts.get("batch_size")),
        max_epochs=int(opts.get("epochs")),
        patience=int(opts.get("patience")),
        seed=int(opts.get("seed")),
        threshold=float(opts.get("threshold")),
    )


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True)


def _write_log(rows: list[dict], path: Path) -> None:
    path.write_text("".join(_dump(row) + "\n" for row in rows), encoding="utf-8")


def emit_report(report: MetricsReport, path: str | Path, labels: list[str] | None = None) -> None:
    """Write the metrics JSON to `path` and a fixed-format table to `path`.txt."""
    doc = report.to_dict(labels)
    path = Path(path)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    lines = [f"documents: {doc['n_docs']}   labels: {doc['n_labels']}", ""]
    lines.append(f"{'':<10}{'precision':>11}{'recall':>11}{'f1':>11}")
    for scope in ("macro", "micro"):
        lines.append(
            f"{scope:<10}"
            f"{doc[f'{scope}_precision']:>11.5f}"
            f"{doc[f'{scope}_recall']:>11.5f}"
            f"{doc[f'{scope}_f1']:>11.5f}"
        )
    lines.append(f"macro F1 (mean of per-label F1): {doc['macro_f1_by_class']:.5f}")
    lines.append("")
    width = max(5, max(len(row["label"]) for row in doc["per_label"]))
    lines.append(f"{'label':<{width}}{'tp':>7}{'fp':>7}{'fn':>7}{'precision':>11}{'recall':>11}{'f1':>11}")
    for row in doc["per_label"]:
        lines.append(
            f"{row['label']:<{width}}{row['tp']:>7}{row['fp']:>7}{row['fn']:>7}"
            f"{row['precision']:>11.5f}{row['recall']:>11.5f}{row['f1']:>11.5f}"
        )
    table = "\n".join(lines) + "\n"
    path.with_suffix(path.suffix + ".txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)


def _cmd_prep(opts: _Options) -> int:
    corpus = opts.require("corpus")
    out = opts.require("out")
    policy = _policy_from(opts)
    with Path(out).open("w", encoding="utf-8") as fh:
        for doc in ingest(corpus):
            tokens = truncate_head(normalize(doc.text), policy.budget)
            chunked = chunk(tokens, policy, doc_id=doc.doc_id)
            for j, ch in enumerate(chunked.valid_chunks()):
                fh.write(_dump({"doc_id": doc.doc_id, "chunk_index": j, "tokens": ch}) + "\n")
    return 0


def _cmd_synth(opts: _Options) -> int:
    out = opts.require("out")
    docs = synth_generate(
        n_docs=int(opts.get("docs") or 200),
        n_labels=int(opts.get("labels") or 5),
        length_range=(int(opts.get("min_len") or 100), int(opts.get("max_len") or 400)),
        planting=opts.get("planting") or "uniform",
        seed=int(opts.get("seed") or 0),
        prefix=int(opts.get("prefix") or 510),
        plant_prob=float(opts.get("plant_prob") if opts.get("plant_prob") is not None else 0.3),
    )
    write_corpus(docs, out)
    return 0


def _load_store(opts: _Options):
    path = opts.get("embeddings")
    return read_store(path) if path else None


def _cmd_train(opts: _Options) -> int:
    corpus = opts.require("corpus")
    ckpt_path = opts.require("checkpoint")
    policy = _policy_from(opts)
    store = _load_store(opts)
    config = _train_config_from(opts, store_mode=store is not None)

    docs = list(ingest(corpus))
    train_docs, val_docs, test_docs = split(docs, SPLIT_RATIOS, config.seed)

    save_dir = opts.get("save_splits")
    if save_dir:
        directory = Path(save_dir)
        directory.mkdir(parents=True, exist_ok=True)
        for name, part in (("train", train_docs), ("val", val_docs), ("test", test_docs)):
            write_corpus(part, directory / f"{name}.jsonl")

    log: list[dict] = []
    ckpt = fit(
        train_docs,
        val_docs,
        config,
        policy,
        encoder_mode="store" if store is not None else "reference",
        store=store,
        labels_top_k=int(opts.get("labels_top_k")),
        hidden_dim=int(opts.get("hidden_dim")),
        vocab_cap=int(opts.get("vocab_cap")),
        keep_unlabeled=opts.boolean("keep_unlabeled"),
        log=log,
    )
    save_checkpoint(ckpt, ckpt_path)
    log_path = Path(opts.get("log") or (str(ckpt_path) + ".log"))
    _write_log(log, log_path)
    sys.stdout.write(
        f"trained {len(train_docs)} docs, best epoch {ckpt.epoch}, "
        f"val micro-F1 {ckpt.best_val_micro_f1:.5f}\n"
    )
    return 0


def _cmd_eval(opts: _Options) -> int:
    ckpt = load_checkpoint(opts.require("checkpoint"))
    docs = list(ingest(opts.require("corpus")))
    report = evaluate(ckpt, docs, store=_load_store(opts))
    emit_report(report, opts.require("report"), labels=ckpt.label_vocab.labels)
    return 0


def _cmd_predict(opts: _Options) -> int:
    ckpt = load_checkpoint(opts.require("checkpoint"))
    docs = list(ingest(opts.require("corpus")))
    rows = predict(ckpt, docs, store=_load_store(opts))
    out = opts.get("out")
    text = "".join(_dump(row) + "\n" for row in rows)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_compare(opts: _Options) -> int:
    corpus = opts.require("corpus")
    report_path = opts.require("report")
    store = _load_store(opts)
    config = _train_config_from(opts, store_mode=store is not None)

    docs = list(ingest(corpus))
    train_docs, val_docs, test_docs = split(docs, SPLIT_RATIOS, config.seed)
    if not test_docs:
        raise D2sError("corpus too small to hold out a test split")

    base = _policy_from(opts)
    results: dict[str, dict] = {}
    for kind in POLICY_KINDS:
        policy = ChunkPolicy(
            kind=kind,
            words_per_chunk=base.words_per_chunk,
            max_chunks=base.max_chunks,
            head_len=base.head_len,
            tail_len=base.tail_len,
        )
        ckpt = fit(
            train_docs,
            val_docs,
            config,
            policy,
            encoder_mode="store" if store is not None else "reference",
            store=store,
            labels_top_k=int(opts.get("labels_top_k")),
            hidden_dim=int(opts.get("hidden_dim")),
            vocab_cap=int(opts.get("vocab_cap")),
            keep_unlabeled=opts.boolean("keep_unlabeled"),
        )
        results[kind] = evaluate(ckpt, test_docs, store=store).to_dict(ckpt.label_vocab.labels)

    doc = {
        "seed": config.seed,
        "n_train": len(train_docs),
        "n_val": len(val_docs),
        "n_test": len(test_docs),
        "policies": results,
        "delta_micro_f1_vs_d2s": {
            kind: results["d2s"]["micro_f1"] - results[kind]["micro_f1"] for kind in POLICY_KINDS
        },
        "delta_macro_f1_vs_d2s": {
            kind: results["d2s"]["macro_f1"] - results[kind]["macro_f1"] for kind in POLICY_KINDS
        },
    }
    Path(report_path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    for kind in POLICY_KINDS:
        sys.stdout.write(
            f"{kind:<10} micro-F1 {results[kind]['micro_f1']:.5f}  macro-F1 {results[kind]['macro_f1']:.5f}\n"
        )
    return 0


_COMMANDS = {
    "prep": _cmd_prep,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "compare": _cmd_compare,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help (0) and usage errors (2)
        return 0 if exc.code == 0 else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        opts = _Options(args, _DEFAULTS)
        return _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (D2sError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
