"""Experiment driver, baselines, reports and synthetic pools."""

from .loop import (
    TRADITION,
    ExperimentLog,
    IterationRecord,
    Surrogate,
    derive_seed,
    run_active_testing,
    run_comparison,
    run_repetitions,
    run_tradition,
)
from .report import emit_svg, read_csv, summarize, write_csv
from .runner import run_experiment
from .synth import make_blobs_pool

__all__ = [
    "TRADITION",
    "ExperimentLog",
    "IterationRecord",
    "Surrogate",
    "derive_seed",
    "emit_svg",
    "make_blobs_pool",
    "read_csv",
    "run_active_testing",
    "run_comparison",
    "run_experiment",
    "run_repetitions",
    "run_tradition",
    "summarize",
    "write_csv",
]
