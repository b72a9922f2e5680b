"""Dense symmetric eigensolver and Fiedler-vector graph partitioning.

The eigensolver runs cyclic Jacobi sweeps until every off-diagonal entry
falls below 1e-12 times the input's Frobenius norm.  Jacobi keeps the
eigenvector basis orthonormal even for degenerate eigenvalues, which
random similarity graphs produce routinely; at the matrix sizes this
package sees (a few hundred vertices) its cubic cost is irrelevant.

Partitioning follows the Fiedler construction: entries of the second
eigenvector of the Laplacian split the vertices by sign, and the sign
patterns of the first l nonzero-eigenvalue eigenvectors generalize the
split to 2^l clusters.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    ConvergenceError,
    DataError,
    DisconnectedGraphError,
    ParameterError,
    ShapeError,
)
from .rdm import LaplacianMatrix

SYMMETRY_TOL = 1e-9
OFFDIAG_STOP_FACTOR = 1e-12
MAX_SWEEPS = 100
ZERO_EIGENVALUE_RTOL = 1e-8
ZERO_ENTRY_TOL = 1e-12


@dataclass(frozen=True)
class EigenResult:
    """Full spectrum: ascending eigenvalues and matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class Partition:
    """Cluster assignment for the vertices of a similarity graph."""

    assignment: np.ndarray
    n_clusters: int
    fiedler_vector: np.ndarray | None = None
    lambda2: float | None = None

    @property
    def empty_clusters(self) -> list[int]:
        """Sign buckets that received no vertex (possible for 2^l > 2)."""
        present = set(np.unique(self.assignment).tolist())
        return [c for c in range(self.n_clusters) if c not in present]


@njit(cache=True)
def _jacobi_sweeps(a, v, thresh, max_sweeps):  # pragma: no cover - jitted
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                m = abs(a[p, q])
                if m > off:
                    off = m
        if off <= thresh:
            return sweep, True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # rotation that zeroes a[p,q]; smaller-root tangent keeps
                # the angle below 45 degrees for stability
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                a[p, p] -= t * apq
                a[q, q] += t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    if r != p and r != q:
                        arp = a[r, p]
                        arq = a[r, q]
                        a[r, p] = c * arp - s * arq
                        a[p, r] = a[r, p]
                        a[r, q] = s * arp + c * arq
                        a[q, r] = a[r, q]
                for r in range(n):
                    vrp = v[r, p]
                    vrq = v[r, q]
                    v[r, p] = c * vrp - s * vrq
                    v[r, q] = s * vrp + c * vrq
    off = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            m = abs(a[p, q])
            if m > off:
                off = m
    return max_sweeps, off <= thresh


def eig_symmetric(matrix: np.ndarray) -> EigenResult:
    """Full eigendecomposition of a symmetric matrix via cyclic Jacobi."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got {m.shape}")
    if m.shape[0] < 1:
        raise ShapeError("matrix must have at least one row")
    if np.abs(m - m.T).max(initial=0.0) > SYMMETRY_TOL:
        raise DataError("matrix is not symmetric within 1e-9")
    a = 0.5 * (m + m.T)
    n = a.shape[0]
    v = np.eye(n)
    thresh = OFFDIAG_STOP_FACTOR * np.linalg.norm(a, "fro")
    _, converged = _jacobi_sweeps(a, v, thresh, MAX_SWEEPS)
    if not converged:
        raise ConvergenceError(f"Jacobi did not converge within {MAX_SWEEPS} sweeps")
    lam = np.diagonal(a).copy()
    order = np.argsort(lam, kind="stable")
    return EigenResult(lam[order], np.ascontiguousarray(v[:, order]))


def _canonical_sign(vec: np.ndarray) -> np.ndarray:
    """Flip so the first entry larger than 1e-12 in magnitude is positive."""
    idx = np.flatnonzero(np.abs(vec) > ZERO_ENTRY_TOL)
    if idx.size and vec[idx[0]] < 0.0:
        return -vec
    return vec


def _zero_multiplicity(eigenvalues: np.ndarray) -> int:
    lam_max = np.abs(eigenvalues).max(initial=0.0)
    return int(np.count_nonzero(np.abs(eigenvalues) <= ZERO_EIGENVALUE_RTOL * lam_max))


def fiedler_vector(lap: LaplacianMatrix) -> tuple[float, np.ndarray]:
    """Second-smallest eigenpair of a connected graph's Laplacian.

    The returned vector has unit norm and canonical sign.  Raises
    :class:`DisconnectedGraphError` (with the component count) when the
    zero eigenvalue is not simple.
    """
    if lap.n < 2:
        raise ShapeError("Fiedler vector needs at least 2 vertices")
    res = eig_symmetric(lap.values)
    mult = _zero_multiplicity(res.eigenvalues)
    if mult != 1:
        raise DisconnectedGraphError(mult)
    v2 = _canonical_sign(res.eigenvectors[:, 1].copy())
    return float(res.eigenvalues[1]), v2


def fiedler_partition(lap: LaplacianMatrix) -> Partition:
    """Two-way split by Fiedler-vector signs.

    Strictly negative entries form cluster 0; positive entries form
    cluster 1.  Entries within 1e-12 of zero may go to either side by the
    theory, so they deterministically join cluster 1.
    """
    lam2, v2 = fiedler_vector(lap)
    assignment = np.where(v2 < -ZERO_ENTRY_TOL, 0, 1).astype(np.int64)
    return Partition(assignment, 2, v2, lam2)


def sign_pattern_partition(lap: LaplacianMatrix, levels: int) -> Partition:
    """2^l-way split from the sign patterns of l nonzero-eigenvalue eigenvectors.

    Bit k of a vertex's cluster id comes from the eigenvector of the
    (k+1)-th smallest nonzero eigenvalue, with the same zero-entry tie
    rule as :func:`fiedler_partition`.  Sign buckets may end up empty;
    :attr:`Partition.empty_clusters` reports them.
    """
    if levels < 1:
        raise ParameterError(f"levels must be >= 1, got {levels}")
    n_clusters = 2**levels
    if lap.n <= n_clusters:
        raise ParameterError(
            f"need more than {n_clusters} vertices for 2^{levels} clusters, got {lap.n}"
        )
    res = eig_symmetric(lap.values)
    mult = _zero_multiplicity(res.eigenvalues)
    if mult != 1:
        raise DisconnectedGraphError(mult)
    assignment = np.zeros(lap.n, dtype=np.int64)
    v2 = None
    for k in range(levels):
        vec = _canonical_sign(res.eigenvectors[:, 1 + k].copy())
        if k == 0:
            v2 = vec
        bit = np.where(vec < -ZERO_ENTRY_TOL, 0, 1)
        assignment |= bit << k
    return Partition(assignment, n_clusters, v2, float(res.eigenvalues[1]))


def partition_accuracy(part: Partition, labels) -> tuple[float, list[float], dict[int, int]]:
    """Best-bijection agreement between clusters and class labels.

    Scans every bijection from cluster ids to class labels and keeps the
    one maximizing overall accuracy.  Returns (overall, per-class
    accuracies in ascending class order, cluster-to-class mapping).
    """
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != part.assignment.shape[0]:
        raise ShapeError("labels must be one class id per vertex")
    classes = np.unique(y)
    if classes.size != part.n_clusters:
        raise DataError(
            f"{classes.size} distinct labels cannot be matched to "
            f"{part.n_clusters} clusters"
        )
    best_acc = -1.0
    best_perm = None
    for perm in itertools.permutations(classes.tolist()):
        mapped = np.asarray(perm)[part.assignment]
        acc = float(np.mean(mapped == y))
        if acc > best_acc:
            best_acc = acc
            best_perm = perm
    mapping = {cluster: cls for cluster, cls in enumerate(best_perm)}
    mapped = np.asarray(best_perm)[part.assignment]
    per_class = [float(np.mean(mapped[y == c] == c)) for c in classes.tolist()]
    return best_acc, per_class, mapping
