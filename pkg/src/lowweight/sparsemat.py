"""Sparse-matrix core: CSR storage, random generation, block-column
partitioning, weighted combination, transpose products and Matrix Market I/O.

Dense matrices and vectors are plain 2-D ``numpy.ndarray`` objects.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import InvalidDensity, NonDivisibleWidth, ParseError, ShapeMismatch, UnsupportedField

MM_BANNER = "%%MatrixMarket matrix coordinate real general"


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable CSR matrix over float64 with sorted, unique column indices
    and no stored zeros."""

    rows: int
    cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ptr = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        idx = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        val = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.rows < 0 or self.cols < 0:
            raise ShapeMismatch(f"negative shape ({self.rows}, {self.cols})")
        if ptr.shape != (self.rows + 1,) or ptr[0] != 0 or ptr[-1] != idx.shape[0]:
            raise ShapeMismatch("row_offsets must have length rows+1, start at 0 and end at nnz")
        if idx.shape != val.shape:
            raise ShapeMismatch("col_indices and values differ in length")
        if np.any(np.diff(ptr) < 0):
            raise ShapeMismatch("row_offsets must be non-decreasing")
        if idx.size:
            if idx.min() < 0 or idx.max() >= self.cols:
                raise ShapeMismatch("column index out of range")
            # strictly increasing inside each row
            step = np.diff(idx)
            row_start = np.zeros(idx.size, dtype=bool)
            row_start[ptr[:-1][np.diff(ptr) > 0]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ShapeMismatch("column indices must be strictly increasing within a row")
            if np.any(val == 0.0):
                raise ShapeMismatch("explicit zeros are not allowed; use from_coo to canonicalise")
        for arr in (ptr, idx, val):
            arr.setflags(write=False)
        object.__setattr__(self, "row_offsets", ptr)
        object.__setattr__(self, "col_indices", idx)
        object.__setattr__(self, "values", val)

    # constructors ---------------------------------------------------------

    @classmethod
    def from_coo(cls, rows, cols, r, c, v):
        """Build from triplets; duplicates are summed and zeros dropped."""
        m = sp.coo_matrix((np.asarray(v, dtype=np.float64), (np.asarray(r), np.asarray(c))),
                          shape=(rows, cols)).tocsr()
        return cls.from_scipy(m)

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m, dtype=np.float64, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a):
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        return cls.from_scipy(sp.csr_matrix(a))

    @classmethod
    def zeros(cls, rows, cols):
        return cls(rows, cols, np.zeros(rows + 1, dtype=np.int64), np.empty(0, np.int64), np.empty(0))

    # views ----------------------------------------------------------------

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return int(self.col_indices.shape[0])

    @property
    def density(self) -> float:
        total = self.rows * self.cols
        return self.nnz / total if total else 0.0

    def row_ids(self):
        return np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.row_offsets))

    def to_scipy(self):
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=self.shape)

    def to_dense(self):
        out = np.zeros(self.shape)
        out[self.row_ids(), self.col_indices] = self.values
        return out

    def scaled(self, alpha: float) -> "SparseMatrix":
        if alpha == 0.0:
            return SparseMatrix.zeros(self.rows, self.cols)
        return SparseMatrix(self.rows, self.cols, self.row_offsets, self.col_indices, alpha * self.values)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.row_offsets, other.row_offsets)
                and np.array_equal(self.col_indices, other.col_indices)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


# ---------------------------------------------------------------------------
# partitioning
# ---------------------------------------------------------------------------

def pad_columns(A: SparseMatrix, k: int) -> SparseMatrix:
    """Append the fewest zero columns so that ``A.cols`` is a multiple of ``k``."""
    extra = (-A.cols) % k
    if extra == 0:
        return A
    return SparseMatrix(A.rows, A.cols + extra, A.row_offsets, A.col_indices, A.values)


def partition_block_columns(A: SparseMatrix, k: int) -> list[SparseMatrix]:
    if k < 1:
        raise NonDivisibleWidth(f"block count must be >= 1, got {k}")
    if A.cols % k:
        raise NonDivisibleWidth(f"{A.cols} columns cannot be split into {k} equal blocks")
    width = A.cols // k
    rows = A.row_ids()
    blk = A.col_indices // width
    out = []
    for b in range(k):
        mask = blk == b
        ptr = np.zeros(A.rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows[mask], minlength=A.rows), out=ptr[1:])
        out.append(SparseMatrix(A.rows, width, ptr, A.col_indices[mask] - b * width, A.values[mask]))
    return out


def hstack(blocks: list[SparseMatrix]) -> SparseMatrix:
    if not blocks:
        raise ShapeMismatch("nothing to stack")
    rows = blocks[0].rows
    if any(b.rows != rows for b in blocks):
        raise ShapeMismatch("blocks differ in row count")
    return SparseMatrix.from_scipy(sp.hstack([b.to_scipy() for b in blocks], format="csr"))


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def generate_random_sparse(rows: int, cols: int, density: float, seed=None) -> SparseMatrix:
    """Each entry is nonzero independently with probability ``density``;
    nonzeros are standard normal.

    Positions come from geometric gaps over the row-major flattening, which
    is exactly i.i.d. Bernoulli sampling without touching every entry.
    """
    if not (0.0 < density <= 1.0) or math.isnan(density):
        raise InvalidDensity(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    total = rows * cols
    if total == 0:
        return SparseMatrix.zeros(rows, cols)
    if density == 1.0:
        flat = np.arange(total, dtype=np.int64)
    else:
        chunks = []
        last = -1
        expect = total * density
        while True:
            size = int(expect + 6.0 * math.sqrt(expect) + 64)
            gaps = rng.geometric(density, size=size)
            pos = last + np.cumsum(gaps, dtype=np.int64)
            inside = pos < total
            chunks.append(pos[inside])
            if not inside.all():
                break
            last = int(pos[-1])
        flat = np.concatenate(chunks)
    vals = rng.standard_normal(flat.shape[0])
    r = flat // cols
    ptr = np.zeros(rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=rows), out=ptr[1:])
    # a standard normal draw of exactly 0.0 would break the no-zero invariant
    vals[vals == 0.0] = np.finfo(float).tiny
    return SparseMatrix(rows, cols, ptr, flat % cols, vals)


def predicted_encoded_density(eta: float, omega: int) -> float:
    """Probability that an entry of an omega-term random combination of
    eta-sparse blocks is nonzero: ``1 - (1 - eta)**omega``."""
    return 1.0 - (1.0 - eta) ** omega


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def sparse_linear_combination(blocks, coeffs) -> SparseMatrix:
    blocks = list(blocks)
    coeffs = [float(c) for c in coeffs]
    if not blocks or len(blocks) != len(coeffs):
        raise ShapeMismatch(f"{len(blocks)} blocks vs {len(coeffs)} coefficients")
    shape = blocks[0].shape
    if any(b.shape != shape for b in blocks):
        raise ShapeMismatch("blocks must share one shape")
    ptr, idx, val = kernels.csr_lincomb(blocks, coeffs)
    return SparseMatrix(shape[0], shape[1], ptr, idx, val)


def spmv_transpose(A: SparseMatrix, x) -> np.ndarray:
    """Return ``A.T @ x`` as an ``(A.cols, 1)`` array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ShapeMismatch(f"x must be a column vector, got shape {x.shape}")
        x = x[:, 0]
    if x.shape[0] != A.rows:
        raise ShapeMismatch(f"x has {x.shape[0]} rows, A has {A.rows}")
    return kernels.spmv_t(A, x).reshape(-1, 1)


def spgemm_transpose(A: SparseMatrix, B: SparseMatrix) -> tuple[np.ndarray, int]:
    """Return ``(A.T @ B, macs)`` with the product dense and ``macs`` the
    number of scalar multiply-accumulates performed."""
    if A.rows != B.rows:
        raise ShapeMismatch(f"A has {A.rows} rows, B has {B.rows}")
    return kernels.spgemm_t(A, B)


# ---------------------------------------------------------------------------
# Matrix Market (coordinate, real, general)
# ---------------------------------------------------------------------------

def write_matrix_market(A: SparseMatrix, path) -> None:
    r = A.row_ids() + 1
    c = A.col_indices + 1
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(MM_BANNER + "\n")
        fh.write(f"{A.rows} {A.cols} {A.nnz}\n")
        for i, j, v in zip(r.tolist(), c.tolist(), A.values.tolist()):
            fh.write(f"{i} {j} {v!r}\n")


def read_matrix_market(path) -> SparseMatrix:
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text:
        raise ParseError("empty file", line=1)
    banner = text[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket" or banner[1].lower() != "matrix":
        raise ParseError(f"bad header {text[0]!r}", line=1)
    fmt, field, symmetry = (t.lower() for t in banner[2:])
    if fmt != "coordinate":
        raise UnsupportedField(f"only coordinate format is supported, got {fmt}")
    if field not in ("real", "double", "integer"):
        raise UnsupportedField(f"field {field!r} is not supported")
    if symmetry != "general":
        raise UnsupportedField(f"symmetry {symmetry!r} is not supported")

    lineno = 1
    size = None
    entries = []
    for lineno, line in enumerate(text[1:], start=2):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if size is None:
            if len(parts) != 3:
                raise ParseError("size line needs 'rows cols nnz'", line=lineno)
            try:
                size = tuple(int(p) for p in parts)
            except ValueError:
                raise ParseError(f"non-integer size line {s!r}", line=lineno) from None
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'row col value', got {s!r}", line=lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"cannot parse entry {s!r}", line=lineno) from None
        if not (1 <= i <= size[0] and 1 <= j <= size[1]):
            raise ParseError(f"index ({i}, {j}) outside {size[0]}x{size[1]}", line=lineno)
        entries.append((i - 1, j - 1, v))
    if size is None:
        raise ParseError("missing size line", line=lineno)
    if len(entries) != size[2]:
        raise ParseError(f"declared {size[2]} entries, found {len(entries)}", line=lineno)
    if entries:
        r, c, v = zip(*entries)
    else:
        r, c, v = (), (), ()
    return SparseMatrix.from_coo(size[0], size[1], r, c, v)
