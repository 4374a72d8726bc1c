"""Command-line surface: compute-labels, train, predict, evaluate.

Diagnostics go to stderr; data goes to files (or the compute-labels summary
on stdout). Exit code 0 means no error path was taken. Training options come
from an optional ``key=value`` config file merged with command-line flags,
flags winning; the fully resolved config is echoed to stderr.
"""

import argparse
import dataclasses
import logging
import os
import sys

from . import __version__, backend, dataset, embstore, metrics, trainer
from .errors import ConfigError, DisrankError, DivergedError

log = logging.getLogger(__name__)


def read_config_file(path) -> dict:
    """Plain key=value lines, UTF-8, '#' comments and blank lines allowed."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            out[key.strip()] = value.strip()
    return out


def _echo_config(config: trainer.TrainConfig) -> None:
    for key, value in sorted(config.manifest().items()):
        print(f"config {key}={value}", file=sys.stderr)


def cmd_compute_labels(args) -> int:
    pairs = dataset.parse_instances(args.instances)
    judgments = dataset.parse_judgments(args.judgments)
    result = dataset.build_labeled_dataset(pairs, judgments)
    dataset.write_labels(result.instances, args.out)
    print(f"labeled {len(result.instances)} skipped {len(result.skipped)}")
    return 0


def _resolve_train_config(args) -> trainer.TrainConfig:
    mapping = {}
    if args.config:
        mapping.update(read_config_file(args.config))
    for f in dataclasses.fields(trainer.TrainConfig):
        flag_value = getattr(args, f.name, None)
        if flag_value is not None:
            mapping[f.name] = flag_value
    return trainer.TrainConfig.from_mapping(mapping)


def cmd_train(args) -> int:
    config = _resolve_train_config(args)
    _echo_config(config)
    labeled = [(iid, value) for iid, value, _ in dataset.read_labels(args.labels)]
    store = embstore.read_store(args.embeddings)
    os.makedirs(args.out_dir, exist_ok=True)
    history_path = os.path.join(args.out_dir, "history.tsv")
    try:
        run = trainer.train(config, labeled, store, args.out_dir)
    except DivergedError as e:
        trainer.emit_history(e.history, history_path)
        raise
    trainer.emit_history(run.history, history_path)
    print(
        f"trained {config.epochs} epochs, best epoch {run.best_epoch} "
        f"(val_loss {run.history[run.best_epoch - 1].val_loss:.6f})",
        file=sys.stderr,
    )
    return 0


def cmd_predict(args) -> int:
    pairs = dataset.parse_instances(args.instances)
    store = embstore.read_store(args.embeddings)
    predictions = trainer.predict(args.checkpoint, pairs, store)
    trainer.write_predictions(predictions, args.out)
    print(f"predicted {len(predictions)} instances", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    predictions = trainer.read_predictions(args.predictions)
    pairs = {p.instance_id: p for p in dataset.parse_instances(args.instances)}
    gold = []
    for iid, value, num in dataset.read_labels(args.labels):
        if iid not in pairs:
            raise ConfigError(
                f"label references instance_id {iid!r} absent from {args.instances}"
            )
        gold.append(dataset.LabeledInstance(pairs[iid], value, num))
    report = metrics.evaluate_report(predictions, gold)
    metrics.write_report(report, args.out)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    rho = "NA" if report.spearman is None else f"{report.spearman:.6f}"
    print(f"evaluated n={report.n} spearman={rho} mse={report.mse:.6f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disrank",
        description="Rank word-in-context use pairs by predicted annotator disagreement.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "compute-labels",
        help="aggregate ordinal judgments into mean pairwise disagreement labels",
    )
    p.add_argument("--instances", required=True, help="instances TSV")
    p.add_argument("--judgments", required=True, help="judgments TSV")
    p.add_argument("--out", required=True, help="labels TSV to write")
    p.set_defaults(func=cmd_compute_labels)

    p = sub.add_parser("train", help="train the regression net on labeled instances")
    p.add_argument("--labels", required=True, help="labels TSV from compute-labels")
    p.add_argument("--embeddings", required=True, help="EMBS store file")
    p.add_argument("--config", help="key=value config file (flags win)")
    p.add_argument("--out-dir", required=True, help="directory for checkpoints etc.")
    for f in dataclasses.fields(trainer.TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "hidden_widths":
            p.add_argument(flag, default=None, help="comma-separated, e.g. 512,256,128,64")
        else:
            p.add_argument(flag, default=None, help=f"default {f.default}")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score instances with a trained checkpoint")
    p.add_argument("--checkpoint", required=True, help="NNCK checkpoint")
    p.add_argument("--instances", required=True, help="instances TSV")
    p.add_argument("--embeddings", required=True, help="EMBS store file")
    p.add_argument("--out", required=True, help="predictions TSV to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="rank-correlate predictions against labels")
    p.add_argument("--predictions", required=True, help="predictions TSV")
    p.add_argument("--labels", required=True, help="gold labels TSV")
    p.add_argument("--instances", required=True, help="instances TSV (for languages)")
    p.add_argument("--out", required=True, help="report TSV to write")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    log.debug("kernel backend: %s", backend.active())
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DisrankError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
