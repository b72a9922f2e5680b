"""Dissimilarity matrices, adjacency/Laplacian construction, and RDM comparison.

A dissimilarity matrix records pairwise distances between a network's
responses to a set of inputs.  Normalized Hamming distances on activation
bit vectors and cosine distances on real embeddings both land in the same
:class:`DissimMatrix` container; similarity (adjacency) and Laplacian
matrices are derived from it for spectral partitioning.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError

SYMMETRY_TOL = 1e-12
LAPLACIAN_INPUT_TOL = 1e-9

_METRIC_RANGES = {"normalized-hamming": 1.0, "cosine": 2.0}


@dataclass(frozen=True)
class DissimMatrix:
    """Symmetric n-by-n matrix of pairwise dissimilarities.

    ``metric`` is either ``"normalized-hamming"`` (entries in [0, 1]) or
    ``"cosine"`` (entries in [0, 2]).  ``layer_tag`` optionally records
    which network layer the responses came from.
    """

    values: np.ndarray
    metric: str
    layer_tag: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ShapeError(f"dissimilarity matrix must be square, got {v.shape}")
        if self.metric not in _METRIC_RANGES:
            raise DataError(f"unknown metric {self.metric!r}")
        if np.abs(v - v.T).max(initial=0.0) > SYMMETRY_TOL:
            raise DataError("dissimilarity matrix is not symmetric")
        if np.abs(np.diagonal(v)).max(initial=0.0) != 0.0:
            raise DataError("dissimilarity matrix must have a zero diagonal")
        hi = _METRIC_RANGES[self.metric]
        if v.size and (v.min() < 0.0 or v.max() > hi):
            raise DataError(f"{self.metric} entries must lie in [0, {hi}]")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LaplacianMatrix:
    """Graph Laplacian built as degree matrix minus weighted adjacency.

    Keeps a reference to the adjacency it was built from.  Row sums are
    zero, off-diagonal entries are non-positive, and the matrix is
    symmetric positive semi-definite.
    """

    values: np.ndarray
    adjacency: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def rdm_hamming(bits, layer_tag: int | None = None) -> DissimMatrix:
    """Normalized-Hamming RDM of a packed bit matrix (one row per sample)."""
    from .bitvec import hamming_matrix

    result = hamming_matrix(bits)
    if layer_tag is None:
        return result
    return DissimMatrix(result.values, result.metric, layer_tag)


def rdm_cosine(embeddings: np.ndarray, layer_tag: int | None = None) -> DissimMatrix:
    """Cosine-distance RDM of real embedding rows: 1 - cos(angle).

    Raises :class:`DataError` if any row has zero norm (the angle is
    undefined).
    """
    e = np.asarray(embeddings, dtype=np.float64)
    if e.ndim != 2:
        raise ShapeError(f"embeddings must be a 2-D matrix, got ndim={e.ndim}")
    if e.shape[0] < 2:
        raise ShapeError("need at least 2 rows to build an RDM")
    norms = np.linalg.norm(e, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise DataError(f"row {bad} has zero norm; cosine distance undefined")
    unit = e / norms[:, None]
    cos = unit @ unit.T
    np.clip(cos, -1.0, 1.0, out=cos)
    vals = 1.0 - cos
    vals = 0.5 * (vals + vals.T)
    np.fill_diagonal(vals, 0.0)
    np.clip(vals, 0.0, 2.0, out=vals)
    return DissimMatrix(vals, "cosine", layer_tag)


def adjacency_from_dissim(rdm: DissimMatrix) -> np.ndarray:
    """Similarity-as-adjacency: one minus dissimilarity, no self-loops.

    Requires a normalized metric (entries in [0, 1]).  Self-loops are
    excluded because they cancel in the Laplacian anyway.
    """
    v = rdm.values
    if v.size and v.max(initial=0.0) > 1.0:
        raise DataError(
            f"adjacency requires a normalized metric; {rdm.metric} entries exceed 1"
        )
    a = 1.0 - v
    np.fill_diagonal(a, 0.0)
    return a


def laplacian(adjacency: np.ndarray) -> LaplacianMatrix:
    """Build L = diag(A e) - A from a symmetric non-negative adjacency."""
    a = np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"adjacency must be square, got {a.shape}")
    if np.abs(a - a.T).max(initial=0.0) > LAPLACIAN_INPUT_TOL:
        raise DataError("adjacency matrix is not symmetric")
    if a.size and a.min() < 0.0:
        raise DataError("adjacency weights must be non-negative")
    if np.abs(np.diagonal(a)).max(initial=0.0) != 0.0:
        raise DataError("adjacency must have a zero diagonal (no self-loops)")
    lap = np.diag(a.sum(axis=1)) - a
    return LaplacianMatrix(lap, a)


def pearson_rdm(r1: DissimMatrix, r2: DissimMatrix) -> float:
    """Pearson correlation of two RDMs over their strict upper triangles.

    The diagonal (forced to zero) and the duplicated lower triangle are
    excluded so they cannot bias the statistic.
    """
    if r1.n != r2.n:
        raise ShapeError(f"RDM sizes differ: {r1.n} vs {r2.n}")
    if r1.n < 3:
        raise ShapeError("need n >= 3 for a meaningful RDM correlation")
    iu = np.triu_indices(r1.n, k=1)
    x = r1.values[iu]
    y = r2.values[iu]
    xd = x - x.mean()
    yd = y - y.mean()
    sx = np.sqrt(np.dot(xd, xd))
    sy = np.sqrt(np.dot(yd, yd))
    if sx == 0.0 or sy == 0.0:
        raise DataError("an RDM has zero variance in its upper triangle")
    return float(np.dot(xd, yd) / (sx * sy))


# Dense matrix file format "DMX1": magic, u32 rows, u32 cols, f64 row-major LE.

DMX1_MAGIC = b"DMX1"


def save_dmx1(matrix: np.ndarray, path) -> None:
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"DMX1 stores 2-D matrices, got ndim={m.ndim}")
    with open(path, "wb") as fh:
        fh.write(DMX1_MAGIC)
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(m.astype("<f8").tobytes())


def load_dmx1(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DMX1_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {DMX1_MAGIC!r}")
        rows, cols = struct.unpack("<II", fh.read(8))
        payload = fh.read(rows * cols * 8)
    if len(payload) != rows * cols * 8:
        raise DataError(f"{path}: truncated DMX1 payload")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)


def save_matrix_csv(matrix: np.ndarray, path) -> None:
    """Full-precision CSV export (one row per line, %.17g fields)."""
    m = np.asarray(matrix, dtype=np.float64)
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join("%.17g" % v for v in row))
            fh.write("\n")


def save_matrix_pgm(matrix: np.ndarray, path) -> None:
    """Binary PGM (P5) heatmap: [min, max] mapped linearly onto [0, 255].

    A constant matrix maps to gray value 128.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"PGM export needs a 2-D matrix, got ndim={m.ndim}")
    lo, hi = m.min(), m.max()
    if hi > lo:
        pix = np.round((m - lo) / (hi - lo) * 255.0)
    else:
        pix = np.full(m.shape, 128.0)
    data = pix.astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (m.shape[1], m.shape[0]))
        fh.write(data.tobytes())
