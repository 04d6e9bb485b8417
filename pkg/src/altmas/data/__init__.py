"""Pool ingestion, oracle and label bookkeeping."""

from .io import (
    load_csv_pool,
    load_idx,
    load_idx_pool,
    load_predictions,
    write_csv_pool,
    write_idx_images,
    write_idx_labels,
    write_predictions,
)
from .pool import (
    LabeledPairs,
    LabelState,
    TestPool,
    create_label_state,
    init_labeled,
    oracle_query,
    split_validation,
)

__all__ = [
    "LabeledPairs",
    "LabelState",
    "TestPool",
    "create_label_state",
    "init_labeled",
    "load_csv_pool",
    "load_idx",
    "load_idx_pool",
    "load_predictions",
    "oracle_query",
    "split_validation",
    "write_csv_pool",
    "write_idx_images",
    "write_idx_labels",
    "write_predictions",
]
