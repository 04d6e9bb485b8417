"""Readers and writers for pool files: IDX, CSV pools and prediction lists.

IDX layout (big-endian):

    [offset] [type]          [value]
    0000     32 bit integer  0x00000803 images / 0x00000801 labels
    0004     32 bit integer  number of items
    0008     32 bit integer  rows            (images only)
    0012     32 bit integer  columns         (images only)
    ....     unsigned byte   pixel / label values
"""

import csv
import gzip
import logging
import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from ..errors import DataFormatError
from .pool import TestPool

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

PathLike = Union[str, Path]


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def read_idx_images(path: PathLike) -> np.ndarray:
    """Read an IDX image file into a (count, rows, cols) uint8 array."""
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise DataFormatError(f"{path}: truncated header")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}")
    expected = count * rows * cols
    body = raw[16:]
    if len(body) < expected:
        raise DataFormatError(f"{path}: truncated file, {len(body)} of {expected} pixel bytes")
    return np.frombuffer(body, dtype=np.uint8, count=expected).reshape(count, rows, cols)


def read_idx_labels(path: PathLike) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise DataFormatError(f"{path}: truncated header")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != IDX_LABELS_MAGIC:
        raise DataFormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}")
    body = raw[8:]
    if len(body) < count:
        raise DataFormatError(f"{path}: truncated file, {len(body)} of {count} label bytes")
    return np.frombuffer(body, dtype=np.uint8, count=count).astype(np.int64)


def load_idx(images_path: PathLike, labels_path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """Load an IDX image/label pair as (N x rows*cols features in [0, 1], labels)."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"count mismatch: {images.shape[0]} images but {labels.shape[0]} labels"
        )
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    logger.info(f"Loaded {features.shape[0]} IDX images of {features.shape[1]} pixels")
    return features, labels


def write_idx_images(path: PathLike, images: np.ndarray) -> None:
    images = np.asarray(images)
    if images.ndim != 3:
        raise DataFormatError(f"images must be (count, rows, cols), got shape {images.shape}")
    header = struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape)
    Path(path).write_bytes(header + images.astype(np.uint8).tobytes())


def write_idx_labels(path: PathLike, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise DataFormatError("IDX labels must fit in an unsigned byte")
    header = struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0])
    Path(path).write_bytes(header + labels.astype(np.uint8).tobytes())


def _parse_label(cell: str, where: str) -> int:
    try:
        value = float(cell)
    except ValueError:
        raise DataFormatError(f"{where}: non-numeric cell {cell!r}") from None
    if not value.is_integer():
        raise DataFormatError(f"{where}: label {cell!r} is not integral")
    if value < 0:
        raise DataFormatError(f"{where}: negative label {cell!r}")
    return int(value)


def load_csv_pool(path: PathLike, standardize: bool = False) -> TestPool:
    """Load a ``label,pred,f0,f1,...`` CSV into a TestPool.

    C is one more than the largest label in either label column.
    """
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["label", "pred"]:
        raise DataFormatError(f"{path}: header must start with 'label,pred', got {rows[0][:2]}")
    width = len(header)

    labels, preds, features = [], [], []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        where = f"{path}:{line_no}"
        if len(row) != width:
            raise DataFormatError(f"{where}: ragged row with {len(row)} cells, expected {width}")
        labels.append(_parse_label(row[0], where))
        preds.append(_parse_label(row[1], where))
        try:
            features.append([float(cell) for cell in row[2:]])
        except ValueError:
            raise DataFormatError(f"{where}: non-numeric feature cell") from None
    if not labels:
        raise DataFormatError(f"{path}: no data rows")

    feature_matrix = np.asarray(features, dtype=np.float64).reshape(len(labels), width - 2)
    if standardize:
        feature_matrix = standardize_columns(feature_matrix)
    num_classes = 1 + max(max(labels), max(preds))
    pool = TestPool(
        features=feature_matrix,
        mut_predictions=np.asarray(preds),
        truth=np.asarray(labels),
        num_classes=num_classes,
    )
    logger.info(f"Loaded CSV pool {path}: N={pool.num_points}, d={pool.num_features}, C={num_classes}")
    return pool


def standardize_columns(features: np.ndarray) -> np.ndarray:
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std[std == 0] = 1.0
    return (features - mean) / std


def write_csv_pool(path: PathLike, pool: TestPool) -> None:
    header = ["label", "pred"] + [f"f{i}" for i in range(pool.num_features)]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for label, pred, row in zip(pool.truth, pool.mut_predictions, pool.features):
            writer.writerow([int(label), int(pred)] + [repr(float(v)) for v in row])


def load_predictions(path: PathLike, num_points: int, num_classes: Optional[int] = None) -> np.ndarray:
    """Read the model-under-test predictions, one integer per line.

    Without ``num_classes`` only negative labels are rejected.
    """
    lines = Path(path).read_text().splitlines()
    if len(lines) != num_points:
        raise DataFormatError(f"{path}: expected {num_points} lines, found {len(lines)}")
    predictions = np.empty(num_points, dtype=np.int64)
    for i, line in enumerate(lines):
        try:
            value = int(line.strip())
        except ValueError:
            raise DataFormatError(f"{path}:{i + 1}: not an integer: {line!r}") from None
        if value < 0:
            raise DataFormatError(f"{path}:{i + 1}: negative label {value}")
        if num_classes is not None and value >= num_classes:
            raise DataFormatError(f"{path}:{i + 1}: label {value} out of range [0, {num_classes})")
        predictions[i] = value
    return predictions


def write_predictions(path: PathLike, predictions: np.ndarray) -> None:
    Path(path).write_text("".join(f"{int(p)}\n" for p in predictions))


def load_idx_pool(
    images_path: PathLike,
    labels_path: PathLike,
    predictions_path: PathLike,
    num_classes: Optional[int] = None,
    limit: Optional[int] = None,
) -> TestPool:
    """Assemble a TestPool from IDX files and a predictions file.

    ``limit`` keeps the first ``limit`` points; the predictions file must then
    hold exactly ``limit`` lines.
    """
    features, labels = load_idx(images_path, labels_path)
    if limit is not None:
        features, labels = features[:limit], labels[:limit]
    predictions = load_predictions(predictions_path, len(labels), num_classes)
    if num_classes is None:
        num_classes = 1 + max(int(labels.max()), int(predictions.max())) if labels.size else 1
    return TestPool(features, predictions, labels, num_classes)
