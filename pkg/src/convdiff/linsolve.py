"""
Compressed sparse row storage and a direct sparse LU solve.

Factorization is delegated to SuperLU (scipy.sparse.linalg.splu); pivot
screening and the post-solve residual check are done here so that failures
always surface as exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

PIVOT_RTOL = 1e-13


class SingularSystemError(RuntimeError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class InvalidInputError(ValueError):
    pass


@dataclass(frozen=True)
class CsrMatrix:
    """Square CSR matrix; column indices sorted and unique within each row."""

    n: int
    row_offsets: np.ndarray
    column_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        off = self.row_offsets
        if len(off) != self.n + 1 or off[0] != 0 or np.any(np.diff(off) < 0):
            raise ValueError("row offsets must be monotone with length n + 1")
        if len(self.column_indices) != off[-1] or len(self.values) != off[-1]:
            raise ValueError("index/value arrays do not match row offsets")
        cols = self.column_indices
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n):
            raise ValueError("column index out of range")
        rows = self.row_of_entry()
        if len(cols) > 1:
            same_row = rows[1:] == rows[:-1]
            if np.any(same_row & (cols[1:] <= cols[:-1])):
                raise ValueError("column indices must be strictly increasing within a row")
        for arr in (self.row_offsets, self.column_indices, self.values):
            arr.setflags(write=False)

    @classmethod
    def from_coo(cls, n, rows, cols, vals):
        """Sum duplicate (row, col) entries in input order and build CSR."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        order = np.lexsort((cols, rows))  # stable: duplicates keep input order
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            start = np.ones(len(rows), dtype=bool)
            start[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            first = np.flatnonzero(start)
            vals = np.add.reduceat(vals, first)
            rows, cols = rows[first], cols[first]
        counts = np.bincount(rows, minlength=n)
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return cls(int(n), offsets, cols, vals)

    @classmethod
    def from_dense(cls, A):
        A = np.asarray(A, dtype=float)
        r, c = np.nonzero(A)
        return cls.from_coo(A.shape[0], r, c, A[r, c])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls.from_coo(n, idx, idx, np.ones(n))

    def row_of_entry(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), np.diff(self.row_offsets))

    @property
    def nnz(self) -> int:
        return len(self.values)

    def diagonal(self) -> np.ndarray:
        rows = self.row_of_entry()
        d = np.zeros(self.n)
        mask = rows == self.column_indices
        d[rows[mask]] = self.values[mask]
        return d

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        A[self.row_of_entry(), self.column_indices] = self.values
        return A

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.array(self.values), np.array(self.column_indices), np.array(self.row_offsets)),
            shape=(self.n, self.n),
        )


def matvec(A: CsrMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (A.n,):
        raise ValueError(f"dimension mismatch: matrix is {A.n}x{A.n}, vector has shape {x.shape}")
    products = A.values * x[A.column_indices]
    return np.bincount(A.row_of_entry(), weights=products, minlength=A.n)


def residual_norm(A: CsrMatrix, x, rhs) -> float:
    return float(np.linalg.norm(matvec(A, x) - np.asarray(rhs, dtype=float)))


def solve(A: CsrMatrix, rhs, tol: float = 1e-10) -> np.ndarray:
    """Solve A x = rhs by sparse LU with partial pivoting.

    Raises SingularSystemError when a pivot falls below 1e-13 times the
    largest row norm or when the residual check ||Ax - b|| <= tol ||b|| fails.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (A.n,):
        raise ValueError(f"dimension mismatch: matrix is {A.n}x{A.n}, rhs has shape {rhs.shape}")
    if not (np.all(np.isfinite(A.values)) and np.all(np.isfinite(rhs))):
        raise InvalidInputError("matrix or right-hand side contains non-finite values")
    if A.n == 0:
        return np.zeros(0)

    row_norm = np.sqrt(np.bincount(A.row_of_entry(), weights=A.values**2, minlength=A.n))
    scale = row_norm.max()
    if scale == 0.0:
        raise SingularSystemError("matrix is identically zero", pivot=0)
    try:
        lu = spla.splu(A.to_scipy().tocsc(), permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(f"LU factorization failed: {exc}") from exc

    pivots = np.abs(lu.U.diagonal())
    small = np.flatnonzero(pivots < PIVOT_RTOL * scale)
    if len(small):
        k = int(small[0])
        # LU = Pr A Pc, so step k eliminates the original column j with perm_c[j] == k
        col = int(np.flatnonzero(lu.perm_c == k)[0])
        raise SingularSystemError(
            f"numerically singular matrix: pivot {pivots[k]:.3e} at elimination step {k} (column {col})",
            pivot=col,
        )

    x = lu.solve(rhs)
    res = residual_norm(A, x, rhs)
    bound = tol * np.linalg.norm(rhs)
    if not np.isfinite(res) or res > bound:
        raise SingularSystemError(f"residual check failed: ||Ax - b|| = {res:.3e} > {bound:.3e}")
    return x
