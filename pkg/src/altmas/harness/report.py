"""CSV logs, run summaries and SVG error curves."""

import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from ..errors import DataFormatError, ReportError
from .loop import ExperimentLog

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "rep",
    "iteration",
    "labels_spent",
    "metric",
    "estimate",
    "truth",
    "rel_err",
    "abs_err",
    "surrogate_acc",
    "chosen_index",
    "wall_time_ms",
]

SVG_HASH_SALT = "altmas"

LogSource = Union[ExperimentLog, Iterable[ExperimentLog], pd.DataFrame]


def log_frame(log: ExperimentLog) -> pd.DataFrame:
    """One row per (rep, iteration, metric), plus a ``strategy`` column."""
    rows = [
        {
            "rep": record.rep,
            "iteration": record.iteration,
            "labels_spent": record.labels_spent,
            "metric": estimate.name,
            "estimate": estimate.estimate,
            "truth": estimate.truth,
            "rel_err": estimate.relative_error,
            "abs_err": estimate.absolute_error,
            "surrogate_acc": record.surrogate_accuracy,
            "chosen_index": record.chosen_index,
            "wall_time_ms": record.wall_time_ms,
        }
        for record in log.records
        for estimate in record.estimates
    ]
    frame = pd.DataFrame(rows, columns=CSV_HEADER)
    frame["strategy"] = log.strategy
    return frame


def write_csv(log: ExperimentLog, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    log_frame(log)[CSV_HEADER].to_csv(path, index=False, na_rep="nan", lineterminator="\n")
    logger.info(f"Wrote {len(log)} records of {log.strategy} to {path}")
    return path


def read_csv(path: Union[str, Path], strategy: Optional[str] = None) -> pd.DataFrame:
    """Load a CSV log; the strategy defaults to the file stem."""
    path = Path(path)
    frame = pd.read_csv(path)
    if list(frame.columns) != CSV_HEADER:
        raise DataFormatError(f"{path}: unexpected columns {list(frame.columns)}")
    frame["strategy"] = strategy or path.stem
    return frame


def as_frame(source: LogSource) -> pd.DataFrame:
    if isinstance(source, pd.DataFrame):
        return source
    if isinstance(source, ExperimentLog):
        return log_frame(source)
    frames = [log_frame(log) for log in source]
    if not frames:
        return pd.DataFrame(columns=CSV_HEADER + ["strategy"])
    return pd.concat(frames, ignore_index=True)


def _standard_error(values: pd.Series) -> float:
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(len(values)))


def _finite_or_none(value: float) -> Optional[float]:
    return None if value is None or not np.isfinite(value) else float(value)


def _mean_se(values: pd.Series) -> Dict[str, Optional[float]]:
    values = values.dropna()
    if values.empty:
        return {"mean": None, "se": None}
    return {"mean": _finite_or_none(values.mean()), "se": _finite_or_none(_standard_error(values))}


def summarize(source: LogSource, n0: Optional[int] = None) -> Dict[str, Any]:
    """Final-iteration errors per strategy: mean and standard error over repetitions."""
    frame = as_frame(source)
    summary: Dict[str, Any] = {"n0": n0, "strategies": {}}
    for strategy, runs in frame.groupby("strategy", sort=True):
        last_iteration = runs.groupby("rep")["iteration"].transform("max")
        final = runs[runs["iteration"] == last_iteration]
        per_rep = final.groupby("rep").agg(
            rel_err=("rel_err", "mean"),
            abs_err=("abs_err", "mean"),
            surrogate_acc=("surrogate_acc", "first"),
            labels_spent=("labels_spent", "first"),
        )
        metrics = {
            name: {
                "estimate": _mean_se(group["estimate"]),
                "truth": _finite_or_none(group["truth"].iloc[0]),
                "rel_err": _mean_se(group["rel_err"]),
            }
            for name, group in final.groupby("metric", sort=False)
        }
        labels_spent = int(per_rep["labels_spent"].max())
        summary["strategies"][strategy] = {
            "repetitions": int(len(per_rep)),
            "labels_spent": labels_spent,
            "budget_spent": labels_spent - n0 if n0 is not None else None,
            "avg_relative_error": _mean_se(per_rep["rel_err"]),
            "avg_absolute_error": _mean_se(per_rep["abs_err"]),
            "surrogate_accuracy": _mean_se(per_rep["surrogate_acc"]),
            "metrics": metrics,
        }
    return summary


def write_summary(summary: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path


def curve_frame(source: LogSource) -> pd.DataFrame:
    """Average relative error against labels spent: mean and se across repetitions."""
    frame = as_frame(source)
    per_rep = (
        frame.groupby(["strategy", "rep", "labels_spent"], sort=True)["rel_err"].mean().reset_index()
    )
    curves = per_rep.groupby(["strategy", "labels_spent"], sort=True)["rel_err"].agg(
        mean="mean", se=_standard_error
    )
    return curves.reset_index()


def build_figure(source: LogSource) -> Figure:
    frame = as_frame(source)
    if frame.empty:
        raise ReportError("cannot chart an empty log")
    curves = curve_frame(frame)
    figure = Figure(figsize=(6.4, 4.0))
    ax = figure.subplots()
    for strategy, curve in curves.groupby("strategy", sort=True):
        x = curve["labels_spent"].to_numpy(dtype=float)
        mean = curve["mean"].to_numpy()
        se = curve["se"].to_numpy()
        if len(x) == 1:
            ax.plot(x, mean, linestyle="none", marker="o", label=strategy)
        else:
            ax.plot(x, mean, label=strategy)
            ax.fill_between(x, mean - se, mean + se, alpha=0.2)
    ax.set_xlabel("labels spent")
    ax.set_ylabel("average relative error")
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    return figure


def render_svg(figure: Figure) -> str:
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def emit_svg(source: LogSource, path: Union[str, Path]) -> Path:
    """Write the error curves of every strategy in ``source`` as a standalone SVG."""
    path = Path(path)
    svg = render_svg(build_figure(source))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    logger.info(f"Wrote chart to {path}")
    return path
