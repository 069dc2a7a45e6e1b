"""Restarted GMRES with right ILU(0) preconditioning, applied column by column."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from lyapmix.errors import ConvergenceError, DimensionError
from lyapmix.precision import Precision, round_to_precision
from lyapmix.sparse import ILU0Factors, as_csr

RESTART = 30
MAXITER_FACTOR = 10
# a restart cycle that keeps this fraction of the residual counts as stalled
STALL_RATIO = 0.9


def _givens(a, b):
    if b == 0:
        return a.dtype.type(1), a.dtype.type(0)
    r = np.hypot(a, b)
    return a / r, b / r


def _gmres_column(M, b, precond, rtol, restart, maxiter, mnorm):
    """Returns ``(x, relative_residual, iterations, status)``.

    `status` is ``"converged"``, ``"backward"`` (stalled with normwise
    backward error below `rtol`) or ``"failed"``.
    """
    dtype = b.dtype
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    x = np.zeros(n, dtype=dtype)
    if bnorm == 0:
        return x, 0.0, 0, "converged"
    target = dtype.type(rtol) * bnorm
    apply_pc = precond.solve if precond is not None else (lambda v: v)

    r = b.copy()
    rnorm = bnorm
    its = 0
    V = np.zeros((n, restart + 1), dtype=dtype)
    H = np.zeros((restart + 1, restart), dtype=dtype)
    cs = np.zeros(restart, dtype=dtype)
    sn = np.zeros(restart, dtype=dtype)
    previous = np.inf
    while True:
        if rnorm <= target:
            return x, float(rnorm / bnorm), its, "converged"
        if rnorm >= STALL_RATIO * previous:
            backward = rnorm / (mnorm * np.linalg.norm(x) + bnorm)
            if backward <= rtol:
                return x, float(rnorm / bnorm), its, "backward"
        if its >= maxiter:
            return x, float(rnorm / bnorm), its, "failed"
        previous = rnorm
        V[:, 0] = r / rnorm
        g = np.zeros(restart + 1, dtype=dtype)
        g[0] = rnorm
        breakdown = False
        j = 0
        while j < restart and its < maxiter:
            w = M @ apply_pc(V[:, j])
            Vj = V[:, : j + 1]
            # classical Gram-Schmidt, applied twice
            h = Vj.T @ w
            w -= Vj @ h
            h2 = Vj.T @ w
            w -= Vj @ h2
            h += h2
            hn = np.linalg.norm(w)
            for i in range(j):
                hi, hk = h[i], h[i + 1]
                h[i] = cs[i] * hi + sn[i] * hk
                h[i + 1] = -sn[i] * hi + cs[i] * hk
            cs[j], sn[j] = _givens(h[j], hn)
            H[: j + 1, j] = h
            H[j, j] = cs[j] * h[j] + sn[j] * hn
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            its += 1
            j += 1
            if hn == 0:
                breakdown = True
                break
            V[:, j] = w / hn
            if abs(g[j]) <= target:
                break
        y = sla.solve_triangular(H[:j, :j], g[:j], check_finite=False)
        x += apply_pc(V[:, :j] @ y)
        r = b - M @ x
        rnorm = np.linalg.norm(r)
        if breakdown:
            # the Krylov space is invariant: x is the exact solution there
            return x, float(rnorm / bnorm), its, "converged"


def gmres_solve(
    M,
    B,
    precond: ILU0Factors | None,
    rtol: float,
    p: Precision,
    restart: int = RESTART,
    maxiter: int | None = None,
    return_info: bool = False,
):
    """Solve ``M X = B`` one column at a time in precision `p`.

    Each returned column satisfies ``||M x - b|| <= rtol ||b||`` with both
    sides evaluated in `p`, except when a restart cycle stalls at the
    attainable accuracy: such a column is accepted if its normwise backward
    error ``||M x - b|| / (||M|| ||x|| + ||b||)`` is below `rtol`. `M` is
    the assembled operator, typically the shifted transpose
    ``A^T + alpha E^T``. The iteration cap is per column, ``10 n`` by
    default.

    With ``return_info=True`` a list of ``(relative_residual, iterations,
    status)`` per column is returned as well.

    Raises
    ------
    ConvergenceError
        A column did not reach the tolerance within the cap. The achieved
        relative residual and the column index are attached.
    """
    M = as_csr(M, p)
    B = np.asarray(B)
    squeeze = B.ndim == 1
    if squeeze:
        B = B[:, None]
    n = M.shape[0]
    if M.shape[1] != n or B.shape[0] != n:
        raise DimensionError(f"operator {M.shape} incompatible with right-hand side {B.shape}")
    if precond is not None and precond.precision is not p:
        raise TypeError("preconditioner precision differs from the solve precision")
    if maxiter is None:
        maxiter = MAXITER_FACTOR * n
    B = round_to_precision(B, p)
    X = np.empty(B.shape, dtype=p.dtype)
    mnorm = abs(M).sum(axis=1).max() if M.nnz else p.dtype.type(0)
    info = []
    for col in range(B.shape[1]):
        x, res, its, status = _gmres_column(
            M, np.ascontiguousarray(B[:, col]), precond, rtol, restart, maxiter, mnorm
        )
        info.append((res, its, status))
        if status == "failed":
            raise ConvergenceError(
                f"GMRES column {col}: relative residual {res:.3e} > {rtol:.3e} after {maxiter} iterations",
                residual=res,
                column=col,
            )
        X[:, col] = x
    X = X[:, 0] if squeeze else X
    return (X, info) if return_info else X
