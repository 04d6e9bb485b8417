"""Command-line entry point: run, report, synth and serve."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import uvicorn

from . import config
from .api.app import app
from .data.io import write_csv_pool, write_predictions
from .errors import AltmasError
from .estimation import true_metric_values
from .harness.report import emit_svg, read_csv, summarize, write_summary
from .harness.runner import run_experiment
from .harness.synth import make_blobs_pool
from .metrics import parse_metric_set
from .models.experiment import load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="altmas", description=__doc__)
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an active-testing experiment")
    run.add_argument("--config", type=Path, help="JSON experiment config")
    pool = run.add_mutually_exclusive_group()
    pool.add_argument("--pool-idx", nargs=2, metavar=("IMAGES", "LABELS"))
    pool.add_argument("--pool-csv", metavar="CSV")
    run.add_argument("--preds", help="model-under-test predictions, one label per line")
    run.add_argument("--limit", type=int, help="keep the first LIMIT pool points (IDX only)")
    run.add_argument("--metrics", help="e.g. accuracy,precision:2 or full21")
    run.add_argument("--strategy", choices=["random", "bald", "altmas"])
    run.add_argument("--budget", type=int)
    run.add_argument("--n0", type=int)
    run.add_argument("--samples", type=int, help="MC-dropout forward passes")
    run.add_argument("--reps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--batch-size", type=int)
    run.add_argument("--retrain-every", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--no-augmentation", action="store_true")
    run.add_argument("--augment-baselines", action="store_true")
    run.add_argument("--standardize", action="store_true")
    run.add_argument(
        "--wall-time", action=argparse.BooleanOptionalAction, help="record per-iteration wall time in the log"
    )
    run.add_argument("--compare", action="store_true", help="also run the bald and tradition baselines")
    run.add_argument("--out", help="output directory")

    report = sub.add_parser("report", help="chart and summarize CSV logs")
    report.add_argument("--log", action="append", required=True, type=Path)
    report.add_argument("--svg", type=Path)
    report.add_argument("--summary", type=Path)

    synth = sub.add_parser("synth", help="write a synthetic pool with known metrics")
    synth.add_argument("--kind", choices=["blobs"], default="blobs")
    synth.add_argument("--n", type=int, default=2000)
    synth.add_argument("--classes", type=int, default=2)
    synth.add_argument("--dim", type=int, default=2)
    synth.add_argument("--mut-acc", type=float, default=0.7)
    synth.add_argument("--error-mode", choices=["random", "region"], default="region")
    synth.add_argument("--separation", type=float, default=3.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--metrics", default="accuracy")
    synth.add_argument("--out", type=Path, required=True)

    serve = sub.add_parser("serve", help="serve results over HTTP")
    serve.add_argument("--host", default=config.HOST)
    serve.add_argument("--port", type=int, default=config.PORT)
    return parser


def _run_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {
        "predictions_path": args.preds,
        "pool_limit": args.limit,
        "metrics": args.metrics,
        "strategy": args.strategy,
        "budget_total": args.budget,
        "n0": args.n0,
        "num_samples": args.samples,
        "repetitions": args.reps,
        "seed": args.seed,
        "batch_size": args.batch_size,
        "retrain_every": args.retrain_every,
        "workers": args.workers,
        "output_dir": args.out,
    }
    if args.pool_idx:
        overrides.update(pool_source="idx", pool_paths=list(args.pool_idx))
    elif args.pool_csv:
        overrides.update(pool_source="csv", pool_paths=[args.pool_csv])
    if args.no_augmentation:
        overrides["augmentation"] = False
    if args.augment_baselines:
        overrides["augment_baselines"] = True
    if args.standardize:
        overrides["standardize"] = True
    if args.wall_time is not None:
        overrides["record_wall_time"] = args.wall_time
    return overrides


def cmd_run(args: argparse.Namespace) -> int:
    experiment = load_config(args.config, _run_overrides(args))
    paths = run_experiment(experiment, compare=args.compare)
    for name, path in paths.items():
        logger.info(f"{name}: {path}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    frame = pd.concat([read_csv(path) for path in args.log], ignore_index=True)
    if args.svg:
        emit_svg(frame, args.svg)
    summary = summarize(frame)
    if args.summary:
        write_summary(summary, args.summary)
    else:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    pool = make_blobs_pool(
        n=args.n,
        num_classes=args.classes,
        dim=args.dim,
        mut_accuracy=args.mut_acc,
        error_mode=args.error_mode,
        separation=args.separation,
        seed=args.seed,
    )
    specs = parse_metric_set(args.metrics, pool.num_classes)
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv_pool(args.out / "pool.csv", pool)
    write_predictions(args.out / "predictions.txt", pool.mut_predictions)
    truth = true_metric_values(specs, pool)
    (args.out / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    print(json.dumps(truth, indent=2))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    logger.info(f"Starting report server on {args.host}:{args.port} over {config.RESULTS_DIR}")
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "report": cmd_report,
    "synth": cmd_synth,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the application."""
    args = _build_parser().parse_args(argv)
    config.setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except AltmasError as e:
        logger.error(str(e))
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except FloatingPointError as e:
        logger.error(f"Numeric failure: {e}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
