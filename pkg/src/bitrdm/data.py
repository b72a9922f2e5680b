"""Synthetic datasets and CSV dataset I/O.

The CSV layout is one sample per line: feature values followed by an
integer class label in the last column, no header.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError, ParameterError


def gaussian_blobs(
    n_samples: int,
    n_features: int,
    n_classes: int,
    seed: int = 0,
    center_distance: float = 4.0,
    std: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded isotropic Gaussian blobs, one per class.

    Class means sit on the first coordinate axis at 0, d, 2d, ... where
    d = ``center_distance`` (so for two classes the mean distance is
    exactly d).  Samples are returned grouped by class; shuffle via a
    train/eval split if needed.
    """
    if n_samples < n_classes or n_classes < 2 or n_features < 1:
        raise ParameterError(
            "need n_samples >= n_classes >= 2 and at least one feature"
        )
    if std <= 0.0 or center_distance <= 0.0:
        raise ParameterError("std and center_distance must be positive")
    rng = np.random.default_rng(seed)
    counts = [
        n_samples // n_classes + (1 if c < n_samples % n_classes else 0)
        for c in range(n_classes)
    ]
    xs, ys = [], []
    for c, count in enumerate(counts):
        center = np.zeros(n_features)
        center[0] = c * center_distance
        xs.append(rng.normal(0.0, std, size=(count, n_features)) + center)
        ys.append(np.full(count, c, dtype=np.int64))
    return np.vstack(xs), np.concatenate(ys)


def split_train_eval(
    x: np.ndarray, y: np.ndarray, eval_fraction: float = 0.2, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic seeded shuffle, then split off the eval fraction."""
    if not 0.0 < eval_fraction < 1.0:
        raise ParameterError(f"eval_fraction must be in (0, 1), got {eval_fraction}")
    n = x.shape[0]
    n_eval = int(round(n * eval_fraction))
    if n_eval == 0 or n_eval == n:
        raise DataError(f"split of {n} samples at {eval_fraction} leaves a side empty")
    perm = np.random.default_rng(seed).permutation(n)
    ev, tr = perm[:n_eval], perm[n_eval:]
    return x[tr], y[tr], x[ev], y[ev]


def save_dataset_csv(x: np.ndarray, y: np.ndarray, path) -> None:
    xm = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.int64)
    with open(path, "w") as fh:
        for row, label in zip(xm, yv):
            fh.write(",".join("%.17g" % v for v in row))
            fh.write(",%d\n" % label)


def load_dataset_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read features and the trailing integer label column."""
    rows, labels = [], []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) < 2:
                raise DataError(f"{path}:{ln}: need at least one feature and a label")
            try:
                rows.append([float(v) for v in fields[:-1]])
                labels.append(int(fields[-1]))
            except ValueError as exc:
                raise DataError(f"{path}:{ln}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: dataset is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: inconsistent column counts {sorted(widths)}")
    return np.asarray(rows, dtype=np.float64), np.asarray(labels, dtype=np.int64)


def load_labels(path) -> np.ndarray:
    """Labels from a CSV: last column of each line as an integer.

    Also accepts a bare one-column label file.
    """
    labels = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(line.split(",")[-1]))
            except ValueError as exc:
                raise DataError(f"{path}:{ln}: {exc}") from exc
    if not labels:
        raise DataError(f"{path}: no labels found")
    return np.asarray(labels, dtype=np.int64)
