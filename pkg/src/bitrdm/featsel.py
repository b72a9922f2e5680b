"""Chi-square scoring of binary features and top-k selection.

The score for feature f compares, class by class, the observed count of
set bits against the count expected if the feature were independent of
the class: sum over classes of (observed - expected)^2 / expected.
A feature that never fires scores 0 by convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitvec import BitMatrix
from .errors import DataError, ParameterError, ShapeError


@dataclass(frozen=True)
class FeatureScores:
    """Per-feature chi-square statistics plus the chosen top-k indices.

    ``selected`` is ordered by descending score with ascending feature
    index breaking ties, so selections are deterministic and the top-k
    list is a prefix of the top-(k+1) list.
    """

    scores: np.ndarray
    selected: np.ndarray

    @property
    def k(self) -> int:
        return self.selected.shape[0]


def chi2_scores(bits: BitMatrix, labels) -> np.ndarray:
    """Chi-square statistic of each bit column against the class labels."""
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != bits.n_rows:
        raise ShapeError(
            f"need one label per row: {bits.n_rows} rows, {y.shape} labels"
        )
    classes, class_index = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise DataError("chi-square scoring needs at least 2 classes present")
    dense = bits.to_dense().astype(np.int64)
    n = bits.n_rows
    # observed[c, f] = count of set bits of feature f within class c
    observed = np.zeros((classes.size, bits.n_bits), dtype=np.int64)
    np.add.at(observed, class_index, dense)
    class_sizes = np.bincount(class_index, minlength=classes.size)
    totals = observed.sum(axis=0)
    scores = np.zeros(bits.n_bits, dtype=np.float64)
    # sequential per-class accumulation keeps the float ops identical to
    # a scalar-loop evaluation of the same formula
    for c in range(classes.size):
        expected = totals * class_sizes[c] / n
        dev = observed[c] - expected
        with np.errstate(invalid="ignore", divide="ignore"):
            term = np.where(totals > 0, dev * dev / expected, 0.0)
        scores += term
    return scores


def select_k_best(bits: BitMatrix, labels, k: int) -> FeatureScores:
    """Indices of the k highest-scoring features (score desc, index asc)."""
    if not 1 <= k <= bits.n_bits:
        raise ParameterError(f"k must be in [1, {bits.n_bits}], got {k}")
    scores = chi2_scores(bits, labels)
    # lexsort's last key is primary; negate scores for descending order
    order = np.lexsort((np.arange(bits.n_bits), -scores))
    return FeatureScores(scores, order[:k].astype(np.int64))


def save_scores_csv(feats: FeatureScores, path) -> None:
    """CSV of (feature_index, score) for every feature, index order."""
    with open(path, "w") as fh:
        fh.write("feature_index,score\n")
        for i, s in enumerate(feats.scores):
            fh.write("%d,%.17g\n" % (i, s))


def save_index_list(indices, path) -> None:
    """Plain index list, one per line, as consumed by column selection."""
    with open(path, "w") as fh:
        for i in np.asarray(indices).tolist():
            fh.write("%d\n" % i)


def load_index_list(path) -> np.ndarray:
    with open(path) as fh:
        return np.asarray([int(line) for line in fh if line.strip()], dtype=np.int64)
