"""Sparse/dense kernels for the foci solver.

Sparse operands (the ego network and the user-word matrix) are kept in a
compressed-row layout. Transposed products go through :func:`spmm_t`, which
walks the same row-major storage, so no transposed copy is ever stored.

Every product needed by one solver iteration is bracketed so that no
intermediate is larger than ``max(m + 1, k) x k``; a full iteration then costs
``O((w + m) k^2 + nnz k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import ContractError

__all__ = [
    "SparseMatrix",
    "TriProducts",
    "as_sparse",
    "frobenius_norm_sq",
    "spmm",
    "spmm_t",
    "gram",
    "grouped_tri_products",
]


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable CSR matrix with strictly positive stored values.

    Column ids are strictly increasing inside each row and explicit zeros
    are never stored. Use :meth:`from_entries` or :meth:`from_dense` rather
    than the raw constructor unless the arrays are already canonical.
    """

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        rows, cols = (int(s) for s in self.shape)
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        data = np.asarray(self.data, dtype=np.float64)
        if rows < 0 or cols < 0:
            raise ContractError(f"negative shape {self.shape}")
        if indptr.shape != (rows + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise ContractError("indptr inconsistent with shape / nnz")
        if len(indices) != len(data):
            raise ContractError("indices and data lengths differ")
        if np.any(np.diff(indptr) < 0):
            raise ContractError("indptr must be non-decreasing")
        if len(indices):
            if indices.min() < 0 or indices.max() >= cols:
                raise ContractError("column id out of range")
            # strictly increasing inside a row <=> every step that is not a row start is positive
            steps = np.diff(indices)
            row_starts = np.zeros(len(indices), dtype=bool)
            row_starts[indptr[:-1][indptr[:-1] < len(indices)]] = True
            if np.any(steps[~row_starts[1:]] <= 0):
                raise ContractError("column ids must be strictly increasing within a row")
            if not np.all(data > 0) or not np.all(np.isfinite(data)):
                raise ContractError("stored values must be finite and > 0")
        for arr in (indptr, indices, data):
            arr.flags.writeable = False
        object.__setattr__(self, "shape", (rows, cols))
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)
        object.__setattr__(
            self, "_csr", sp.csr_matrix((data, indices, indptr), shape=(rows, cols))
        )

    @classmethod
    def from_entries(cls, rows, cols, values, shape, duplicates="sum"):
        """Build from coordinate triples.

        ``duplicates`` is ``"sum"`` (accumulate) or ``"max"`` (keep the largest,
        which for binary adjacency collapses repeats to a single 1).
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if np.any(values < 0):
            raise ContractError("sparse values must be non-negative")
        if duplicates == "max":
            order = np.lexsort((-values, cols, rows))
            rows, cols, values = rows[order], cols[order], values[order]
            keep = np.ones(len(rows), dtype=bool)
            keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            rows, cols, values = rows[keep], cols[keep], values[keep]
        elif duplicates != "sum":
            raise ContractError(f"unknown duplicates policy {duplicates!r}")
        coo = sp.coo_matrix((values, (rows, cols)), shape=shape)
        csr = coo.tocsr()
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        return cls(csr.shape, csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_dense(cls, array):
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2:
            raise ContractError("expected a 2-d array")
        r, c = np.nonzero(array)
        return cls.from_entries(r, c, array[r, c], array.shape)

    @property
    def nnz(self):
        return len(self.data)

    def toarray(self):
        return self._csr.toarray()

    def to_scipy(self):
        """Return a (read-only backed) scipy CSR view."""
        return self._csr

    def row_ids(self):
        """Row index of every stored entry, aligned with ``indices``."""
        return np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


class TriProducts(NamedTuple):
    """The six network-side products of one solver iteration."""

    nt_u_v: np.ndarray  # N^T U V
    n_u_vt: np.ndarray  # N U V^T
    ut_n_u: np.ndarray  # U^T N U
    u_v_g_vt: np.ndarray  # U (V (U^T U) V^T)
    u_vt_g_v: np.ndarray  # U (V^T (U^T U) V)
    g_v_g: np.ndarray  # (U^T U) V (U^T U)


def as_sparse(x) -> SparseMatrix:
    """Coerce a dense array, scipy matrix, or wrapper with ``.matrix`` to SparseMatrix."""
    if isinstance(x, SparseMatrix):
        return x
    inner = getattr(x, "matrix", None)
    if isinstance(inner, SparseMatrix):
        return inner
    if sp.issparse(x):
        coo = sp.coo_matrix(x)
        return SparseMatrix.from_entries(coo.row, coo.col, coo.data, coo.shape)
    return SparseMatrix.from_dense(x)


def _dense(b, name="B"):
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2:
        raise ContractError(f"{name} must be 2-d, got shape {b.shape}")
    return b


def frobenius_norm_sq(matrix) -> float:
    """Sum of squared entries of a sparse or dense matrix."""
    if isinstance(matrix, SparseMatrix):
        values = matrix.data
    else:
        values = np.asarray(matrix, dtype=np.float64).ravel()
    return float(np.dot(values, values))


def spmm(a: SparseMatrix, b) -> np.ndarray:
    """``A @ B`` for sparse ``A`` and dense ``B``; cost ``O(nnz(A) * B.cols)``."""
    b = _dense(b)
    if a.shape[1] != b.shape[0]:
        raise ContractError(f"spmm: A is {a.shape}, B is {b.shape}")
    return np.asarray(a._csr @ b)


def spmm_t(a: SparseMatrix, b) -> np.ndarray:
    """``A.T @ B`` scattered from A's row-major storage."""
    b = _dense(b)
    if a.shape[0] != b.shape[0]:
        raise ContractError(f"spmm_t: A is {a.shape}, B is {b.shape}")
    # .T on a CSR matrix is a CSC view over the same buffers, not a copy
    return np.asarray(a._csr.T @ b)


def gram(x) -> np.ndarray:
    """``X.T @ X``, mirrored so the result is exactly symmetric."""
    x = _dense(x, "X")
    g = x.T @ x
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def grouped_tri_products(n: SparseMatrix, u, v) -> TriProducts:
    """Network-side products with O((m+1) k^2 + nnz(N) k) bracketing."""
    u = _dense(u, "U")
    v = _dense(v, "V")
    size = n.shape[0]
    k = u.shape[1]
    if n.shape != (size, size):
        raise ContractError(f"N must be square, got {n.shape}")
    if u.shape[0] != size:
        raise ContractError(f"U has {u.shape[0]} rows, N has {size}")
    if v.shape != (k, k):
        raise ContractError(f"V must be {k}x{k}, got {v.shape}")
    g = gram(u)
    uv = u @ v
    uvt = u @ v.T
    return TriProducts(
        nt_u_v=spmm_t(n, uv),
        n_u_vt=spmm(n, uvt),
        ut_n_u=u.T @ spmm(n, u),
        u_v_g_vt=u @ (v @ g @ v.T),
        u_vt_g_v=u @ (v.T @ g @ v),
        g_v_g=g @ v @ g,
    )
