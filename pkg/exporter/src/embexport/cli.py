"""CLI: export-embeddings --instances PATH --out PATH [--model ID]
[--batch-size N] [--fake] [--fake-dim D]"""

import argparse
import logging
import sys

from . import DEFAULT_MODEL, ExporterError, __version__
from .exporter import ExportJob, export_embeddings


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = argparse.ArgumentParser(
        prog="export-embeddings",
        description="Encode instance contexts and write an EMBS embedding store.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--instances", required=True, help="instances TSV")
    parser.add_argument("--out", required=True, help="EMBS file to write")
    parser.add_argument("--model", default=DEFAULT_MODEL, help=f"default {DEFAULT_MODEL}")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument(
        "--fake",
        action="store_true",
        help="derive deterministic pseudo-embeddings from the context text "
        "instead of loading the encoder",
    )
    parser.add_argument(
        "--fake-dim", type=int, default=768, help="dimension for --fake output"
    )
    args = parser.parse_args(argv)

    job = ExportJob(
        instances_path=args.instances,
        output_path=args.out,
        model_id=args.model,
        batch_size=args.batch_size,
        fake=args.fake,
        fake_dim=args.fake_dim,
    )
    try:
        count = export_embeddings(job)
    except (ExporterError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {count} records to {args.out}", file=sys.stderr)
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
