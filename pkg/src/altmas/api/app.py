"""Read-only FastAPI server over experiment results."""

import logging
from pathlib import Path
from typing import List

import pandas as pd
from fastapi import Depends, FastAPI, HTTPException
from fastapi.responses import Response

from .. import __version__, config
from ..errors import AltmasError
from ..harness.report import build_figure, read_csv, render_svg, summarize
from .auth import verify_api_key

logger = logging.getLogger(__name__)


def get_results_dir() -> Path:
    """Dependency returning the results directory; tests override it."""
    return Path(config.RESULTS_DIR)


def _run_logs(results_dir: Path, run: str) -> List[Path]:
    run_dir = (results_dir / run).resolve()
    if results_dir.resolve() not in run_dir.parents or not run_dir.is_dir():
        raise HTTPException(status_code=404, detail=f"Run {run!r} not found")
    logs = sorted(run_dir.glob("*.csv"))
    if not logs:
        raise HTTPException(status_code=404, detail=f"Run {run!r} has no logs")
    return logs


def _load_run(results_dir: Path, run: str) -> pd.DataFrame:
    try:
        return pd.concat([read_csv(path) for path in _run_logs(results_dir, run)], ignore_index=True)
    except AltmasError as e:
        raise HTTPException(status_code=422, detail=str(e)) from None


# --- FastAPI Application ---
app = FastAPI(
    title="altmas report server",
    description="Serves summaries and error curves of finished active-testing runs.",
    version=__version__,
)


@app.get("/health", tags=["Status"])
def health():
    return {"status": "ok", "version": __version__}


@app.get("/runs", tags=["Runs"])
def list_runs(
    results_dir: Path = Depends(get_results_dir),
    api_key: str = Depends(verify_api_key),
):
    """Lists run directories holding at least one CSV log."""
    if not results_dir.is_dir():
        return {"runs": []}
    runs = []
    for run_dir in sorted(p for p in results_dir.iterdir() if p.is_dir()):
        logs = sorted(run_dir.glob("*.csv"))
        if logs:
            runs.append({"run": run_dir.name, "strategies": [p.stem for p in logs]})
    return {"runs": runs}


@app.get("/runs/{run}/summary", tags=["Runs"])
def run_summary(
    run: str,
    results_dir: Path = Depends(get_results_dir),
    api_key: str = Depends(verify_api_key),
):
    """Final-iteration error summary per strategy, computed from the CSV logs."""
    return {"run": run, **summarize(_load_run(results_dir, run))}


@app.get("/runs/{run}/chart.svg", tags=["Runs"])
def run_chart(
    run: str,
    results_dir: Path = Depends(get_results_dir),
    api_key: str = Depends(verify_api_key),
):
    frame = _load_run(results_dir, run)
    try:
        svg = render_svg(build_figure(frame))
    except AltmasError as e:
        raise HTTPException(status_code=422, detail=str(e)) from None
    return Response(content=svg, media_type="image/svg+xml")
