"""Configuration settings for altmas."""

import logging
import os

# --- Configuration ---
LOG_LEVEL = os.getenv("ALTMAS_LOG_LEVEL", "INFO")
RESULTS_DIR = os.getenv("ALTMAS_RESULTS_DIR", "./results")
API_KEY = os.getenv("ALTMAS_API_KEY")
HOST = os.getenv("ALTMAS_HOST", "127.0.0.1")
PORT = int(os.getenv("ALTMAS_PORT", "8000"))
WORKERS = int(os.getenv("ALTMAS_WORKERS", "1"))

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"


def setup_logging(level: str = LOG_LEVEL) -> None:
    """Configure root logging once for CLI and server entry points."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
    )
