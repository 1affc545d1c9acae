"""Command-line surface: export, verify.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .errors import ExportError
from .exporter import ExportJob, run_export
from .store import verify_store

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embexport", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("export", help="encode chunk text and write a D2SE store")
    p.add_argument("--chunks", required=True, help="chunked-corpus JSONL file")
    p.add_argument("--model", required=True, help="pretrained model identifier or local directory")
    p.add_argument("--out", required=True, help="output store path")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-tokens", type=int, default=512, help="encoder token limit per chunk")

    p = sub.add_parser("verify", help="check a store file's structure and report its header")
    p.add_argument("--store", required=True, help="store file to scan")
    return parser


def _cmd_export(args: argparse.Namespace) -> int:
    job = ExportJob(
        chunk_file=args.chunks,
        model=args.model,
        out=args.out,
        batch_size=args.batch_size,
        max_tokens=args.max_tokens,
    )
    result = run_export(job)
    print(f"exported {result.count} vectors (h={result.h}, {result.n_documents} documents) to {args.out}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    summary = verify_store(args.store)
    print(
        f"{args.store}: ok, h={summary.h}, {summary.count} records, "
        f"{summary.n_documents} documents, {summary.file_size} bytes"
    )
    return 0


_COMMANDS = {"export": _cmd_export, "verify": _cmd_verify}


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
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
