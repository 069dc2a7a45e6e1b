"""Small dense kernels: pivoted Householder QR, symmetric eigensolver and the
Kronecker-vectorized reference solver for the Lyapunov equation.

The QR and the eigensolver work in the precision of their input array.
"""

from __future__ import annotations

import os
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from lyapmix import kernels
from lyapmix.errors import DimensionError, OracleSizeError, SingularEquationError

DEFAULT_DENSE_CAP = 400
JACOBI_MAX_SWEEPS = 30
# Kronecker systems up to this many unknowns use a dense LU, larger ones a sparse LU
_DENSE_KRON_LIMIT = 1600


def householder_qr_pivoted(Z, want_q: bool = True):
    """Thin Householder QR with column pivoting, ``Z[:, perm] = Q @ Rhat``.

    The pivot is the remaining column of largest norm, lowest index on exact
    ties, so ``|diag(Rhat)|`` is non-increasing. `Q` is ``m x k`` and `Rhat`
    is ``k x n`` with ``k = min(m, n)``. With ``want_q=False`` the returned
    `Q` is ``None``.
    """
    Z = np.asarray(Z)
    if Z.dtype not in (np.float32, np.float64):
        Z = Z.astype(np.float64)
    dtype = Z.dtype
    m, n = Z.shape
    k = min(m, n)
    R = np.array(Z, dtype=dtype, order="F", copy=True)
    perm = np.arange(n)
    reflectors = []
    for j in range(k):
        sub = R[j:, j:]
        norms = np.einsum("ij,ij->j", sub, sub)
        piv = j + int(np.argmax(norms))
        if norms[piv - j] == 0:
            break
        if piv != j:
            R[:, [j, piv]] = R[:, [piv, j]]
            perm[[j, piv]] = perm[[piv, j]]
        x = R[j:, j]
        alpha = np.linalg.norm(x)
        sign = dtype.type(1) if x[0] >= 0 else dtype.type(-1)
        v = x.copy()
        v[0] += sign * alpha
        v /= np.linalg.norm(v)
        R[j:, j + 1:] -= 2 * np.outer(v, v @ R[j:, j + 1:])
        R[j, j] = -sign * alpha
        R[j + 1:, j] = 0
        reflectors.append(v)
    Rhat = np.triu(R[:k, :])
    Q = None
    if want_q:
        Q = np.eye(m, k, dtype=dtype)
        for j in range(len(reflectors) - 1, -1, -1):
            v = reflectors[j]
            Q[j:, :] -= 2 * np.outer(v, v @ Q[j:, :])
    return Q, Rhat, perm


def sym_eig(S, backend=None):
    """Eigenpairs of the symmetric part of `S` by cyclic Jacobi.

    Eigenvalues are returned sorted by descending magnitude, positive before
    negative on equal magnitude. Iteration stops
    when the off-diagonal Frobenius norm is below ``10 eps ||S||_F`` or after
    30 sweeps.
    """
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"sym_eig needs a square matrix, got {S.shape}")
    if S.dtype not in (np.float32, np.float64):
        S = S.astype(np.float64)
    dtype = S.dtype
    n = S.shape[0]
    a = np.ascontiguousarray((S + S.T) / 2, dtype=dtype)
    v = np.eye(n, dtype=dtype)
    if n == 0:
        return np.zeros(0, dtype=dtype), v
    tol = 10 * np.finfo(dtype).eps * float(np.linalg.norm(a))
    kernels.get_backend(backend).jacobi_eigh(a, v, tol, JACOBI_MAX_SWEEPS)
    w = np.diagonal(a).copy()
    order = np.lexsort((-w, -np.abs(w)))
    return w[order], np.ascontiguousarray(v[:, order])


def dense_cap() -> int:
    return int(os.environ.get("LYAPMIX_DENSE_CAP", DEFAULT_DENSE_CAP))


def lyapunov_operator(E, A, X):
    """``A^T X E + E^T X A`` for dense or sparse `E`, `A` and dense `X`."""
    AtX = np.asarray(A.T @ X)
    EtX = np.asarray(E.T @ X)
    return np.asarray((E.T @ AtX.T).T) + np.asarray((A.T @ EtX.T).T)


def dense_lyap_oracle(E, A, G, S, cap: int | None = None) -> np.ndarray:
    """Reference solution of ``A^T X E + E^T X A + G S G^T = 0`` in double.

    The equation is vectorized as ``(E^T kron A^T + A^T kron E^T) vec(X) =
    -vec(G S G^T)`` and solved by LU, dense for small systems and sparse
    otherwise. The result is symmetrized.
    """
    cap = dense_cap() if cap is None else cap
    Ed = sp.csr_matrix(E, dtype=np.float64)
    Ad = sp.csr_matrix(A, dtype=np.float64)
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    n = Ad.shape[0]
    if Ad.shape != (n, n) or Ed.shape != (n, n) or G.shape[0] != n or S.shape != (G.shape[1],) * 2:
        raise DimensionError("inconsistent Lyapunov problem dimensions")
    if n > cap:
        raise OracleSizeError(f"n = {n} exceeds the dense oracle cap {cap}")
    W = G @ S @ G.T
    rhs = -W.reshape(-1, order="F")
    K = (sp.kron(Ed.T, Ad.T) + sp.kron(Ad.T, Ed.T)).tocsc()
    N = n * n
    if N <= _DENSE_KRON_LIMIT:
        Kd = K.toarray()
        with warnings.catch_warnings():
            # singularity is reported below from the pivots
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(Kd, check_finite=False)
        udiag = np.abs(np.diagonal(lu))
        if udiag.min() <= N * np.finfo(np.float64).eps * udiag.max():
            raise SingularEquationError("Kronecker system is singular: no unique solution")
        x = sla.lu_solve((lu, piv), rhs)
    else:
        try:
            lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SingularEquationError(f"Kronecker system is singular: {exc}") from None
        udiag = np.abs(lu.U.diagonal())
        if udiag.min() <= N * np.finfo(np.float64).eps * udiag.max():
            raise SingularEquationError("Kronecker system is singular: no unique solution")
        x = lu.solve(rhs)
    X = x.reshape((n, n), order="F")
    return (X + X.T) / 2
