"""Run a configured experiment and write its artifacts to the output directory."""

import logging
from pathlib import Path
from typing import Dict, Optional

from ..models.experiment import ExperimentConfig, load_pool
from .loop import ExperimentLog, SurrogateFactory, run_active_testing, run_comparison
from .report import emit_svg, summarize, write_csv, write_summary

logger = logging.getLogger(__name__)

CHART_NAME = "curves.svg"
SUMMARY_NAME = "summary.json"


def write_artifacts(logs: Dict[str, ExperimentLog], output_dir: Path, n0: int) -> Dict[str, Path]:
    """``<strategy>.csv`` per log, plus summary.json and curves.svg over all of them."""
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: write_csv(log, output_dir / f"{name}.csv") for name, log in logs.items()}
    paths["summary"] = write_summary(summarize(list(logs.values()), n0=n0), output_dir / SUMMARY_NAME)
    paths["chart"] = emit_svg(list(logs.values()), output_dir / CHART_NAME)
    return paths


def run_experiment(
    config: ExperimentConfig,
    compare: bool = False,
    surrogate_factory: Optional[SurrogateFactory] = None,
) -> Dict[str, Path]:
    pool = load_pool(config)
    if compare:
        logs = run_comparison(config, pool, surrogate_factory)
    else:
        logs = {config.strategy: run_active_testing(config, pool, surrogate_factory)}
    paths = write_artifacts(logs, Path(config.output_dir), config.n0)
    logger.info(f"Experiment finished; artifacts in {config.output_dir}")
    return paths
