"""Command-line entry point: ``voicedet-export export ...``."""

import argparse
import sys

from .errors import ExporterError
from .export import ExportJob, export_embeddings
from .provider import BUILTIN_MODEL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voicedet-export",
        description="Export speaker embeddings for every clip in a dataset manifest.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="embed all manifest clips into a #dim=192 TSV")
    p.add_argument("--manifest", required=True, help="dataset manifest TSV")
    p.add_argument("--out", required=True, help="embedding TSV to write")
    p.add_argument("--batch", type=int, default=16, help="clips per inference batch")
    p.add_argument(
        "--model",
        default=BUILTIN_MODEL,
        help=f"provider: {BUILTIN_MODEL!r} or 'module:callable' (default {BUILTIN_MODEL!r})",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(args.manifest, args.out, model=args.model, batch_size=args.batch)
        result = export_embeddings(job)
    except (ExporterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"exported {len(result.exported)} embeddings -> {result.output_path}")
    if result.failures:
        print(
            f"{len(result.failures)} clips failed; see {result.sidecar_path}",
            file=sys.stderr,
        )
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
