# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""Main program."""
import argparse
import dataclasses
import json
import signal
import sys
from pathlib import Path

from softcounter import __author__
from softcounter import __copyright__
from softcounter import __description__
from softcounter import __version__
from softcounter.analysis import bench_scaling
from softcounter.analysis import default_edge_counts
from softcounter.analysis import overlap_report
from softcounter.config import RunConfig
from softcounter.config import load_config
from softcounter.config import with_overrides
from softcounter.exception import GenerationError
from softcounter.exception import InvalidConfigError
from softcounter.gsc import dump_soft_counts
from softcounter.gsc import prepare_graph
from softcounter.gsc import trace_layers
from softcounter.gsc import trace_to_json
from softcounter.gsc import write_soft_counts_csv
from softcounter.gsc import write_trace_json
from softcounter.instance_io import load_instances
from softcounter.instance_io import load_predictions
from softcounter.instance_io import save_instances
from softcounter.instance_io import save_predictions
from softcounter.logging_config import setup_logging
from softcounter.models import GSCModel
from softcounter.models import MODEL_KINDS
from softcounter.models import build_model
from softcounter.models import load_checkpoint
from softcounter.models import save_checkpoint
from softcounter.sparsevd import SparseCurveTracker
from softcounter.sparsevd import fit_sparse_regression
from softcounter.sparsevd import track_curve
from softcounter.synthetic import dissection_task_config
from softcounter.synthetic import generate_sparse_regression
from softcounter.synthetic import generate_synthetic
from softcounter.trainer import Trainer
from softcounter.trainer import evaluate
from softcounter.trainer import write_metric_log
from softcounter.visu import plot_layer_trace
from softcounter.visu import plot_sparse_curves

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2

CONFIG_ERRORS = (InvalidConfigError, GenerationError)


class SmartFormatter(argparse.HelpFormatter):
    """Smart formatter for argparse - The lines are split for long text"""

    def _split_lines(self, text, width):
        if text.startswith("R|"):
            return text[2:].splitlines()
        # this is the RawTextHelpFormatter._split_lines
        return argparse.HelpFormatter._split_lines(  # pylint: disable=protected-access
            self, text, width
        )


class SigintHandler:  # pylint: disable=too-few-public-methods
    """Handles the signal"""

    def __init__(self):
        self.SIGINT = False  # pylint: disable=invalid-name

    def signal_handler(self, sig: int, frame):
        """Trap the signal

        Args:
            sig (int): the signal number
            frame: the current stack frame
        """
        # pylint: disable=unused-argument
        from .logging_config import get_logger

        logger = get_logger(__name__)
        logger.error("You pressed Ctrl+C")
        self.SIGINT = True
        sys.exit(EXIT_CONFIG)


def _write_json(data, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(data, stream, indent=2)
        stream.write("\n")


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------
def cmd_gen(options, config: RunConfig, logger) -> None:
    synthetic = config.synthetic
    if options.preset == "dissection":
        synthetic = dissection_task_config(synthetic.count, synthetic.seed)
    changes = {
        key: value
        for key, value in (
            ("count", options.count),
            ("seed", options.seed),
            ("planted_noise_rate", options.planted_noise_rate),
        )
        if value is not None
    }
    synthetic = dataclasses.replace(synthetic, **changes)
    instances = generate_synthetic(synthetic, config.vocab)
    save_instances(instances, options.out)
    logger.info("corpus written to {path}", path=options.out)


def cmd_train(options, config: RunConfig, logger) -> None:
    config = with_overrides(
        config,
        seed=options.seed,
        max_epochs=options.epochs,
        lr=options.lr,
        long_run=True if options.long_run else None,
    )
    train_set = load_instances(options.data, config.vocab)
    dev_set = load_instances(options.dev, config.vocab) if options.dev else []
    model = build_model(
        options.model,
        config.vocab,
        config.model,
        config.counter,
        config.sparsevd,
        config.vd_mlp,
        train_set,
        config.train.seed,
    )
    result = Trainer(model, config.train).train(train_set, dev_set)
    out = Path(options.out)
    save_checkpoint(
        model,
        out / "checkpoint.json",
        train=config.train.to_dict(),
        best_epoch=result.best_epoch,
        best_dev_accuracy=result.best_dev_accuracy,
    )
    write_metric_log(result.history, out / "metrics.jsonl")
    if dev_set:
        predictions = evaluate(model, dev_set).predictions
        save_predictions(predictions, out / "dev_predictions.jsonl")
    logger.info("checkpoint and metric log written to {out}", out=out)


def cmd_eval(options, config: RunConfig, logger) -> None:
    model, _ = load_checkpoint(options.checkpoint)
    instances = load_instances(options.data, model.vocab)
    result = evaluate(model, instances)
    if options.preds_out:
        save_predictions(result.predictions, options.preds_out)
    logger.info("accuracy={acc:.4f}", acc=result.accuracy)


def cmd_inspect(options, config: RunConfig, logger) -> None:
    model, _ = load_checkpoint(options.checkpoint)
    if not isinstance(model, GSCModel):
        raise InvalidConfigError(
            "checkpoint", model.kind, "inspect needs a gsc checkpoint"
        )
    out = Path(options.out)
    rows = dump_soft_counts(
        model.params, model.vocab, options.top_k, model.graph_config.activation
    )
    write_soft_counts_csv(rows, out / "soft_counts.csv", model.vocab, options.named)
    if options.data:
        traces = []
        instances = load_instances(options.data, model.vocab)[: options.instances]
        for instance in instances:
            for index, choice in enumerate(instance.choices):
                snapshots = trace_layers(choice.graph, model.params, model.graph_config)
                prepared = prepare_graph(choice.graph, model.graph_config)
                traces.append(
                    trace_to_json(prepared, snapshots, id=instance.id, choice=index)
                )
                if options.plot:
                    plot_layer_trace(
                        prepared,
                        snapshots,
                        out / f"trace_{instance.id}_{index}.png",
                    )
        write_trace_json(traces, out / "traces.json")
    logger.info("soft counts written to {out}", out=out)


def _prune_regression(options, config: RunConfig, logger) -> None:
    features, targets, coefficients = generate_sparse_regression(seed=config.train.seed)
    result = fit_sparse_regression(
        features, targets, config.sparsevd, seed=config.train.seed
    )
    active = coefficients != 0
    out = Path(options.out)
    report = {
        "experiment": "regression",
        "kept_active": int((result.kept & active).sum()),
        "pruned_null": int((~result.kept & ~active).sum()),
        "active": int(active.sum()),
        "null": int((~active).sum()),
        "rmse_mean": result.rmse_mean,
        "rmse_pruned": result.rmse_pruned,
        "sparse_ratio": result.sparse_ratio,
        "coefficients": result.coefficients.tolist(),
        "closed_form": result.closed_form.tolist(),
        "true_coefficients": coefficients.tolist(),
    }
    _write_json(report, out / "report.json")
    _write_curve(result.curve, out, options.plot)
    logger.info(
        "kept {a}/{na} active, pruned {z}/{nz} null features",
        a=report["kept_active"],
        na=report["active"],
        z=report["pruned_null"],
        nz=report["null"],
    )


def _write_curve(reports, out: Path, plot: bool) -> None:
    tracker = SparseCurveTracker({}, reports=list(reports))
    tracker.write_csv(out / "curve.csv")
    if plot:
        plot_sparse_curves(tracker.reports, out / "curve.png")


def cmd_prune(options, config: RunConfig, logger) -> None:
    config = with_overrides(
        config,
        seed=options.seed,
        max_epochs=options.epochs,
        lr=options.lr,
        patience=0,
        select_best=False,
    )
    if options.regression:
        _prune_regression(options, config, logger)
        return
    if not options.data:
        raise InvalidConfigError("data", None, "prune needs --data unless --regression")
    train_set = load_instances(options.data, config.vocab)
    dev_set = load_instances(options.dev, config.vocab) if options.dev else train_set
    model = build_model(
        "vd-mlp",
        config.vocab,
        config.model,
        sparse_config=config.sparsevd,
        mlp_config=config.vd_mlp,
        train_instances=train_set,
        seed=config.train.seed,
    )
    trainer = Trainer(model, config.train)
    tracker = track_curve(trainer, model.curve_layers(), config.sparsevd.threshold)
    trainer.train(train_set, dev_set)
    model.pruned = False
    before = evaluate(model, dev_set).accuracy
    model.pruned = True
    after = evaluate(model, dev_set).accuracy
    out = Path(options.out)
    _write_curve(tracker.reports, out, options.plot)
    save_checkpoint(model, out / "checkpoint.json", train=config.train.to_dict())
    report = {
        "experiment": "dissection",
        "accuracy_before_pruning": before,
        "accuracy_after_pruning": after,
        "sparse_ratio": model.block_ratios(),
    }
    _write_json(report, out / "report.json")
    logger.info(
        "accuracy {before:.4f} -> {after:.4f} after pruning | ratios={ratios}",
        before=before,
        after=after,
        ratios=report["sparse_ratio"],
    )


def cmd_bench(options, config: RunConfig, logger) -> None:
    counts = options.edges or default_edge_counts(options.min_edges, options.max_edges)
    report = bench_scaling(counts, options.repetitions, seed=options.seed or 0)
    if options.out:
        _write_json(report.to_dict(), options.out)
    logger.info(
        "slope={slope:.3f} r2={r2:.4f} over {n} size(s)",
        slope=report.slope,
        r2=report.r_squared,
        n=len(report.rows),
    )


def cmd_overlap(options, config: RunConfig, logger) -> None:
    gold = {
        instance.id: instance.label
        for instance in load_instances(options.gold, config.vocab)
    }
    report = overlap_report(
        load_predictions(options.a), load_predictions(options.b), gold
    )
    if options.out:
        _write_json(report.to_dict(), options.out)
    for name, count in report.to_dict()["regions"].items():
        logger.info("{name}: {count}", name=name, count=count)


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------
def parse_cli(argv=None) -> argparse.Namespace:
    """Parse command line inputs.

    Returns
    -------
    argparse.Namespace
        Command line options
    """
    parser = argparse.ArgumentParser(
        description=__description__,
        formatter_class=SmartFormatter,
        epilog=f"{__author__} - {__copyright__}",
    )
    parser.add_argument(
        "-v", "--version", action="version", version="%(prog)s " + __version__
    )
    parser.add_argument(
        "--level",
        choices=["INFO", "DEBUG", "WARNING", "ERROR", "CRITICAL", "TRACE"],
        default="INFO",
        help="set Level log (default: %(default)s)",
    )
    parser.add_argument("--log-file", help="rotating JSON operational log")
    parser.add_argument("--stats-file", help="JSON lines statistics log")
    parser.add_argument("--config", help="JSON configuration file")

    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a synthetic corpus")
    gen.add_argument("--out", required=True, help="instance file to write")
    gen.add_argument("--count", type=int, help="number of instances")
    gen.add_argument("--seed", type=int, help="corpus seed")
    gen.add_argument(
        "--planted-noise-rate", type=float, help="noise edges of planted type"
    )
    gen.add_argument(
        "--preset",
        choices=["default", "dissection"],
        default="default",
        help="R|default: the synthetic section of the configuration\n"
        "dissection: corpus of the SparseVD dispensability experiment",
    )
    gen.set_defaults(func=cmd_gen)

    train = commands.add_parser("train", help="train a model")
    train.add_argument("--model", choices=MODEL_KINDS, default="gsc")
    train.add_argument("--data", required=True, help="training instance file")
    train.add_argument("--dev", help="dev instance file (model selection)")
    train.add_argument("--seed", type=int)
    train.add_argument("--epochs", type=int, help="maximum number of epochs")
    train.add_argument("--lr", type=float, help="learning rate")
    train.add_argument("--long-run", action="store_true", help="75 epochs")
    train.add_argument("--out", required=True, help="output directory")
    train.set_defaults(func=cmd_train)

    evaluation = commands.add_parser("eval", help="evaluate a checkpoint")
    evaluation.add_argument("--checkpoint", required=True)
    evaluation.add_argument("--data", required=True)
    evaluation.add_argument("--preds-out", help="prediction file to write")
    evaluation.set_defaults(func=cmd_eval)

    inspect = commands.add_parser(
        "inspect", help="soft counts and layer traces of a GSC"
    )
    inspect.add_argument("--checkpoint", required=True)
    inspect.add_argument("--top-k", type=int, default=30, help="(default: %(default)s)")
    inspect.add_argument("--named", action="store_true", help="readable triplet names")
    inspect.add_argument("--data", help="instances to trace")
    inspect.add_argument(
        "--instances", type=int, default=1, help="(default: %(default)s)"
    )
    inspect.add_argument("--plot", action="store_true", help="draw the traces")
    inspect.add_argument("--out", required=True, help="output directory")
    inspect.set_defaults(func=cmd_inspect)

    prune = commands.add_parser("prune", help="SparseVD dissection run")
    prune.add_argument("--data", help="training instance file")
    prune.add_argument("--dev", help="dev instance file")
    prune.add_argument(
        "--regression", action="store_true", help="sparse regression run"
    )
    prune.add_argument("--seed", type=int)
    prune.add_argument("--epochs", type=int, default=60, help="(default: %(default)s)")
    prune.add_argument("--lr", type=float, default=3e-2, help="(default: %(default)s)")
    prune.add_argument("--plot", action="store_true", help="draw the curves")
    prune.add_argument("--out", required=True, help="output directory")
    prune.set_defaults(func=cmd_prune)

    bench = commands.add_parser("bench", help="run-time scaling of the GSC layers")
    bench.add_argument("--edges", type=int, nargs="*", help="edge counts")
    bench.add_argument("--min-edges", type=int, default=1000)
    bench.add_argument("--max-edges", type=int, default=1_000_000)
    bench.add_argument("--repetitions", type=int, default=5)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--out", help="JSON report")
    bench.set_defaults(func=cmd_bench)

    overlap = commands.add_parser("overlap", help="prediction overlap of two models")
    overlap.add_argument("--a", required=True, help="prediction file of model A")
    overlap.add_argument("--b", required=True, help="prediction file of model B")
    overlap.add_argument("--gold", required=True, help="instance file with the labels")
    overlap.add_argument("--out", help="JSON report")
    overlap.set_defaults(func=cmd_overlap)

    return parser.parse_args(argv)


def main(argv=None) -> int:
    """Run one subcommand and return its exit code."""
    options = parse_cli(argv)
    setup_logging(
        log_level=options.level,
        log_file=options.log_file,
        stats_file=options.stats_file,
    )
    from .logging_config import get_logger

    logger = get_logger(__name__)
    try:
        config = load_config(options.config)
        options.func(options, config, logger)
    except CONFIG_ERRORS as error:
        logger.error(str(error))
        return EXIT_CONFIG
    except (ValueError, IndexError, RuntimeError, OSError) as error:
        logger.error(str(error))
        return EXIT_VALIDATION
    except Exception as error:  # pylint: disable=broad-except
        logger.exception(error)
        return EXIT_VALIDATION
    return EXIT_OK


def run():
    """Main function that instanciates the library."""
    handler = SigintHandler()
    signal.signal(signal.SIGINT, handler.signal_handler)
    sys.exit(main())


if __name__ == "__main__":
    # execute only if run as a script
    run()
