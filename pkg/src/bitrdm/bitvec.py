"""Packed binary activation patterns and Hamming-distance kernels.

A bit vector records which ReLU units of a layer are strictly positive
for one input.  Rows are packed into 64-bit words (little-endian bit
order: bit j of a row lives in word j // 64 at bit position j % 64) so
pairwise Hamming distances reduce to XOR plus hardware popcount.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError, ShapeError
from .rdm import DissimMatrix

BVM1_MAGIC = b"BVM1"


def _words_per_row(n_bits: int) -> int:
    return (n_bits + 63) // 64


def _pack_bits(dense: np.ndarray) -> np.ndarray:
    """Pack a (rows, n_bits) array of {0,1} into (rows, words) uint64."""
    n_rows, n_bits = dense.shape
    wpr = _words_per_row(n_bits)
    packed = np.packbits(dense.astype(np.uint8), axis=1, bitorder="little")
    out = np.zeros((n_rows, wpr * 8), dtype=np.uint8)
    out[:, : packed.shape[1]] = packed
    return out.view("<u8").astype(np.uint64)


def _unpack_bits(words: np.ndarray, n_bits: int) -> np.ndarray:
    as_bytes = words.astype("<u8").view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :n_bits]


@dataclass(frozen=True)
class BitRow:
    """One packed bit vector."""

    words: np.ndarray
    n_bits: int

    def __post_init__(self):
        object.__setattr__(self, "words", np.ascontiguousarray(self.words, dtype=np.uint64))
        self.words.flags.writeable = False

    def to_dense(self) -> np.ndarray:
        """Unpacked 0/1 vector of length n_bits."""
        return _unpack_bits(self.words, self.n_bits)


@dataclass(frozen=True)
class BitMatrix:
    """Immutable matrix of packed bit vectors, one row per sample.

    Pad bits beyond ``n_bits`` are always zero, so whole-word operations
    (XOR, popcount) never see garbage.
    """

    words: np.ndarray
    n_bits: int

    def __post_init__(self):
        w = np.ascontiguousarray(self.words, dtype=np.uint64)
        if w.ndim != 2:
            raise ShapeError(f"packed storage must be 2-D, got ndim={w.ndim}")
        if self.n_bits < 1:
            raise ShapeError("a bit matrix needs at least one bit per row")
        if w.shape[1] != _words_per_row(self.n_bits):
            raise ShapeError(
                f"expected {_words_per_row(self.n_bits)} words per row "
                f"for {self.n_bits} bits, got {w.shape[1]}"
            )
        w.flags.writeable = False
        object.__setattr__(self, "words", w)

    @property
    def n_rows(self) -> int:
        return self.words.shape[0]

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "BitMatrix":
        """Pack a (rows, n_bits) array of {0,1} values."""
        d = np.asarray(dense)
        if d.ndim != 2:
            raise ShapeError(f"dense bit input must be 2-D, got ndim={d.ndim}")
        if d.shape[1] < 1:
            raise ShapeError("a bit matrix needs at least one bit per row")
        return cls(_pack_bits(d), d.shape[1])

    @classmethod
    def from_rows(cls, rows: list[BitRow]) -> "BitMatrix":
        if not rows:
            raise ShapeError("cannot build a bit matrix from zero rows")
        n_bits = rows[0].n_bits
        if any(r.n_bits != n_bits for r in rows):
            raise ShapeError("all rows must have the same bit count")
        return cls(np.stack([r.words for r in rows]), n_bits)

    def row(self, i: int) -> BitRow:
        return BitRow(self.words[i], self.n_bits)

    def to_dense(self) -> np.ndarray:
        return _unpack_bits(self.words, self.n_bits)


def binarize(trace_layer: np.ndarray) -> BitRow:
    """Bit vector of one post-ReLU layer output: bit j = 1 iff entry j > 0.

    Entries must be non-negative; a negative entry means the caller fed
    something that never went through ReLU.
    """
    v = np.asarray(trace_layer, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"layer output must be a vector, got ndim={v.ndim}")
    if v.size and v.min() < 0.0:
        raise DataError("post-ReLU layer output contains a negative entry")
    bits = (v > 0.0).astype(np.uint8)
    return BitRow(_pack_bits(bits[None, :])[0], v.shape[0])


def binarize_matrix(values: np.ndarray) -> BitMatrix:
    """Row-wise :func:`binarize` for a (samples, units) activation matrix."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ShapeError(f"activation matrix must be 2-D, got ndim={v.ndim}")
    if v.size and v.min() < 0.0:
        raise DataError("post-ReLU activations contain a negative entry")
    return BitMatrix.from_dense(v > 0.0)


def hamming(a: BitRow, b: BitRow) -> int:
    """Number of positions where two bit vectors differ."""
    if a.n_bits != b.n_bits:
        raise ShapeError(f"bit lengths differ: {a.n_bits} vs {b.n_bits}")
    return int(np.bitwise_count(a.words ^ b.words).sum())


def hamming_counts(bits: BitMatrix) -> np.ndarray:
    """All-pairs raw Hamming distances as an (n, n) int64 matrix."""
    n = bits.n_rows
    w = bits.words
    counts = np.zeros((n, n), dtype=np.int64)
    for i in range(n - 1):
        d = np.bitwise_count(w[i + 1 :] ^ w[i]).sum(axis=1).astype(np.int64)
        counts[i, i + 1 :] = d
        counts[i + 1 :, i] = d
    return counts


def hamming_matrix(bits: BitMatrix) -> DissimMatrix:
    """Normalized pairwise Hamming distances: counts / n_bits, zero diagonal."""
    if bits.n_rows < 2:
        raise ShapeError("need at least 2 rows for a distance matrix")
    h = hamming_counts(bits) / float(bits.n_bits)
    return DissimMatrix(h, "normalized-hamming")


def select_columns(bits: BitMatrix, indices) -> BitMatrix:
    """New bit matrix keeping only the given bit positions, in order."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1 or idx.size == 0:
        raise ParameterError("column selection needs a non-empty 1-D index list")
    if idx.min() < 0 or idx.max() >= bits.n_bits:
        raise ParameterError(
            f"column index out of range [0, {bits.n_bits}): "
            f"min={idx.min()}, max={idx.max()}"
        )
    if np.unique(idx).size != idx.size:
        raise ParameterError("duplicate column indices are not allowed")
    return BitMatrix.from_dense(bits.to_dense()[:, idx])


def save_bvm1(bits: BitMatrix, path) -> None:
    """Write the "BVM1" format: magic, u32 rows, u32 bits, u64 LE words."""
    with open(path, "wb") as fh:
        fh.write(BVM1_MAGIC)
        fh.write(struct.pack("<II", bits.n_rows, bits.n_bits))
        fh.write(bits.words.astype("<u8").tobytes())


def load_bvm1(path) -> BitMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != BVM1_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {BVM1_MAGIC!r}")
        n_rows, n_bits = struct.unpack("<II", fh.read(8))
        wpr = _words_per_row(n_bits)
        payload = fh.read(n_rows * wpr * 8)
    if len(payload) != n_rows * wpr * 8:
        raise DataError(f"{path}: truncated BVM1 payload")
    words = np.frombuffer(payload, dtype="<u8").reshape(n_rows, wpr)
    return BitMatrix(words.astype(np.uint64), n_bits)
