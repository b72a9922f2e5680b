"""Soft-margin linear SVM trained by dual coordinate descent, plus metrics.

The solver optimizes the L1-hinge dual one sample at a time, visiting
samples in a seeded shuffled order each epoch, and stops once the largest
projected-gradient violation of an epoch drops below ``tol``.  The bias
is folded in as a constant augmented feature of value 1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DataError, ParameterError, ShapeError

SVM1_MAGIC = b"SVM1"


@dataclass(frozen=True)
class TrainMeta:
    """Bookkeeping from one solver run.

    ``dual_objectives`` grows monotonically (coordinate ascent);
    ``primal_objectives`` of the derived w may oscillate on the way down.
    Both are sampled at epoch boundaries, starting from the zero vector.
    """

    epochs_run: int
    duality_gap: float
    seed: int
    primal_objectives: tuple[float, ...] = field(repr=False, default=())
    dual_objectives: tuple[float, ...] = field(repr=False, default=())
    dual_coef: np.ndarray | None = field(repr=False, default=None)


@dataclass(frozen=True)
class SvmModel:
    """Linear decision function score(x) = w . x + b."""

    w: np.ndarray
    b: float
    C: float
    meta: TrainMeta | None = None


@njit(cache=True)
def _dcd_epoch(x, y, alpha, w, order, c_reg, qii):  # pragma: no cover - jitted
    max_violation = 0.0
    n_features = x.shape[1]
    for k in range(order.shape[0]):
        i = order[k]
        g = 0.0
        for j in range(n_features):
            g += w[j] * x[i, j]
        g = g * y[i] - 1.0
        a = alpha[i]
        if a <= 0.0:
            pg = g if g < 0.0 else 0.0
        elif a >= c_reg:
            pg = g if g > 0.0 else 0.0
        else:
            pg = g
        if abs(pg) > max_violation:
            max_violation = abs(pg)
        if pg != 0.0:
            new_a = a - g / qii[i]
            if new_a < 0.0:
                new_a = 0.0
            elif new_a > c_reg:
                new_a = c_reg
            if new_a != a:
                delta = (new_a - a) * y[i]
                for j in range(n_features):
                    w[j] += delta * x[i, j]
                alpha[i] = new_a
    return max_violation


def _primal_objective(x_aug, y, w, c_reg):
    margins = 1.0 - y * (x_aug @ w)
    hinge = np.maximum(margins, 0.0).sum()
    return 0.5 * float(w @ w) + c_reg * float(hinge)


def svm_train(
    x: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    tol: float = 1e-4,
    max_iter: int = 1000,
    seed: int = 0,
) -> SvmModel:
    """Fit a linear SVM minimizing 0.5 ||w||^2 + C sum hinge(y (w.x + b)).

    Deterministic given ``seed``: the per-epoch visiting order comes from
    a seeded generator.  Labels must be -1/+1 with both present.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-D, got ndim={x.ndim}")
    if yv.shape != (x.shape[0],):
        raise ShapeError("need exactly one label per sample")
    if x.shape[0] < 2:
        raise DataError("need at least 2 training samples")
    if not np.all(np.isfinite(x)):
        raise DataError("features contain non-finite values")
    if not np.all(np.isin(yv, (-1.0, 1.0))):
        raise DataError("labels must be -1 or +1")
    if np.unique(yv).size < 2:
        raise DataError("both classes must be present for training")
    if C <= 0.0:
        raise ParameterError(f"C must be positive, got {C}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")

    n = x.shape[0]
    x_aug = np.hstack([x, np.ones((n, 1))])
    qii = np.einsum("ij,ij->i", x_aug, x_aug)
    alpha = np.zeros(n)
    w_aug = np.zeros(x_aug.shape[1])
    rng = np.random.default_rng(seed)
    primal = [_primal_objective(x_aug, yv, w_aug, C)]
    dual = [0.0]
    epochs_run = 0
    for _ in range(max_iter):
        order = rng.permutation(n).astype(np.int64)
        violation = _dcd_epoch(x_aug, yv, alpha, w_aug, order, float(C), qii)
        epochs_run += 1
        primal.append(_primal_objective(x_aug, yv, w_aug, C))
        dual.append(float(alpha.sum()) - 0.5 * float(w_aug @ w_aug))
        if violation < tol:
            break
    meta = TrainMeta(
        epochs_run=epochs_run,
        duality_gap=primal[-1] - dual[-1],
        seed=seed,
        primal_objectives=tuple(primal),
        dual_objectives=tuple(dual),
        dual_coef=alpha,
    )
    return SvmModel(w_aug[:-1].copy(), float(w_aug[-1]), float(C), meta)


def svm_scores(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """Decision scores w . x + b for each row of x."""
    xm = np.asarray(x, dtype=np.float64)
    if xm.ndim != 2 or xm.shape[1] != model.w.shape[0]:
        raise ShapeError(
            f"feature dimension mismatch: model has {model.w.shape[0]}, "
            f"data has {xm.shape[1] if xm.ndim == 2 else '?'}"
        )
    return xm @ model.w + model.b


def svm_predict(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """Predicted -1/+1 labels; a score of exactly 0 maps to +1."""
    return labels_from_scores(svm_scores(model, x))


def labels_from_scores(scores: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(scores) < 0.0, -1, 1).astype(np.int64)


def accuracy(pred, truth) -> float:
    """Fraction of exact matches between two label vectors."""
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1 or p.size == 0:
        raise ShapeError("prediction and truth must be equal-length non-empty vectors")
    return float(np.mean(p == t))


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties sharing the mean of their rank range."""
    order = np.argsort(values, kind="stable")
    sv = values[order]
    ranks = np.empty(values.shape[0], dtype=np.float64)
    bounds = np.flatnonzero(np.r_[True, sv[1:] != sv[:-1], True])
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        ranks[order[lo:hi]] = 0.5 * (lo + hi - 1) + 1.0
    return ranks


def auroc(scores, truth) -> float:
    """Probability a random positive outscores a random negative.

    Ties count half, per the Mann-Whitney rank-sum formulation with
    midranks.  ``truth`` uses +1 for positives and -1 for negatives.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truth)
    if s.shape != t.shape or s.ndim != 1:
        raise ShapeError("scores and truth must be equal-length vectors")
    pos = t == 1
    neg = t == -1
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUROC needs both a positive and a negative sample")
    ranks = _midranks(s)
    rank_sum = float(ranks[pos].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def save_svm1(model: SvmModel, path) -> None:
    """Write the "SVM1" format: magic, u32 d, f64 b, d f64 weights, f64 C."""
    with open(path, "wb") as fh:
        fh.write(SVM1_MAGIC)
        fh.write(struct.pack("<I", model.w.shape[0]))
        fh.write(struct.pack("<d", model.b))
        fh.write(model.w.astype("<f8").tobytes())
        fh.write(struct.pack("<d", model.C))


def load_svm1(path) -> SvmModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SVM1_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {SVM1_MAGIC!r}")
        (d,) = struct.unpack("<I", fh.read(4))
        (b,) = struct.unpack("<d", fh.read(8))
        w = np.frombuffer(fh.read(8 * d), dtype="<f8")
        (c_reg,) = struct.unpack("<d", fh.read(8))
    if w.shape[0] != d:
        raise DataError(f"{path}: truncated SVM1 payload")
    return SvmModel(w.astype(np.float64), b, c_reg)
