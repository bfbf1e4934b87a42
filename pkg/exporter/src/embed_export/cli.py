"""embed-export command line: one subcommand, export."""

from __future__ import annotations

import argparse
import sys

from .exporter import ExportError, ExportJob, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export transformer embeddings as sidecar JSONL files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("export", help="embed a sentence-pair dataset")
    sp.add_argument("--model", required=True, help="checkpoint path or hub id")
    sp.add_argument("--dataset", required=True, help="native TSV of sentence pairs")
    sp.add_argument("--pooling", choices=("mean", "cls"), default="mean",
                    help="sentence pooling (default mean)")
    sp.add_argument("--granularity", choices=("sentence", "token"), default="sentence",
                    help="one vector per side, or one per whitespace word")
    sp.add_argument("--layer", type=int, default=-1,
                    help="hidden-state layer: 0 = input embeddings, -1 = last (default)")
    sp.add_argument("--out", required=True, help="output JSONL path")
    sp.add_argument("--batch-size", type=int, default=8)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            model=args.model,
            dataset=args.dataset,
            out=args.out,
            pooling=args.pooling,
            granularity=args.granularity,
            layer=args.layer,
            batch_size=args.batch_size,
        )
        count = export_embeddings(job)
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {count} record(s) to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
