"""Sparse CSR helpers: casting, products and the ILU(0) preconditioner."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from lyapmix import kernels
from lyapmix.errors import DimensionError, ZeroPivotError
from lyapmix.precision import Precision, round_to_precision


def as_csr(A, p: Precision | None = None) -> sp.csr_matrix:
    """CSR copy of `A` with sorted indices and no duplicates, stored in `p`."""
    A = sp.csr_matrix(A)
    if p is None:
        p = Precision.of(A) if A.dtype in (np.float32, np.float64) else Precision.DOUBLE
    if A.dtype != p.dtype:
        A = sp.csr_matrix(
            (round_to_precision(A.data, p), A.indices, A.indptr), shape=A.shape
        )
    else:
        A = A.copy()
    A.sum_duplicates()
    A.sort_indices()
    return A


def spmm(A, X, p: Precision) -> np.ndarray:
    """``A @ X`` with both operands cast to `p` and accumulated there."""
    X = np.asarray(X)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    if A.shape[1] != X.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {X.shape}")
    A = as_csr(A, p)
    Y = np.asarray(A @ round_to_precision(X, p))
    assert Y.dtype == p.dtype
    return Y[:, 0] if squeeze else Y


def shifted_transpose(A, E, alpha, p: Precision) -> sp.csr_matrix:
    """``A^T + alpha E^T`` formed from operands already rounded to `p`."""
    At = as_csr(sp.csr_matrix(A).T, p)
    Et = as_csr(sp.csr_matrix(E).T, p)
    a = p.dtype.type(alpha)
    M = (At + Et.multiply(a)).tocsr()
    return as_csr(M, p)


@dataclass(frozen=True)
class ILU0Factors:
    """Unit-lower L and upper U sharing the pattern of the input matrix.

    ``lu`` holds the strictly lower part of L and the upper part of U in the
    CSR layout given by ``indptr``/``indices``; ``diag[i]`` is the position of
    entry (i, i).
    """

    indptr: np.ndarray
    indices: np.ndarray
    lu: np.ndarray
    diag: np.ndarray
    shape: tuple

    @property
    def precision(self) -> Precision:
        return Precision.of(self.lu)

    def solve(self, b, backend=None) -> np.ndarray:
        """Apply ``(LU)^{-1}`` to a vector, in the factors' precision."""
        x = np.array(b, dtype=self.lu.dtype, copy=True)
        kernels.get_backend(backend).ilu0_solve(
            self.indptr, self.indices, self.lu, self.diag, x
        )
        return x

    def L(self) -> sp.csr_matrix:
        n = self.shape[0]
        M = sp.csr_matrix((self.lu, self.indices, self.indptr), shape=self.shape)
        return (sp.tril(M, k=-1) + sp.identity(n, dtype=self.lu.dtype)).tocsr()

    def U(self) -> sp.csr_matrix:
        M = sp.csr_matrix((self.lu, self.indices, self.indptr), shape=self.shape)
        return sp.triu(M).tocsr()


def ilu0_factorize(A, backend=None) -> ILU0Factors:
    """Incomplete LU factorization with zero fill-in, in the precision of `A`."""
    A = as_csr(A)
    n, m = A.shape
    if n != m:
        raise DimensionError(f"ILU(0) needs a square matrix, got {A.shape}")
    indptr = A.indptr.astype(np.intc)
    indices = A.indices.astype(np.intc)
    diag = np.empty(n, dtype=np.intc)
    for i in range(n):
        row = indices[indptr[i]:indptr[i + 1]]
        pos = np.searchsorted(row, i)
        if pos == len(row) or row[pos] != i:
            raise ZeroPivotError(i)
        diag[i] = indptr[i] + pos
    lu = A.data.copy()
    failed = kernels.get_backend(backend).ilu0_factor(indptr, indices, lu, diag)
    if failed >= 0:
        raise ZeroPivotError(int(failed))
    return ILU0Factors(indptr, indices, lu, diag, (n, n))
