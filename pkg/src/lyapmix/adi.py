"""Mixed-precision low-rank ADI for ``A^T X E + E^T X A + G S G^T = 0``.

Three storage precisions are used: one for the solution factor `Z`, one for
the increment and residual factors `V` and `R`, and one for the small inner
factors `T` and `Y`. They must be ordered coarse to fine (``Z >= VR >= TY``
in machine epsilon). The shifted systems ``(A^T + alpha E^T) V = R`` are
solved by ILU(0)-preconditioned GMRES in the `VR` precision, with `A`, `E`
and the shift rounded to that precision first.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from lyapmix.errors import ConvergenceError, DimensionError
from lyapmix.krylov import gmres_solve
from lyapmix.lowrank import CompressionOptions, LDLTFactorization, lr_compress, lr_norm
from lyapmix.precision import DOUBLE, Precision, round_to_precision
from lyapmix.shifts import ShiftSet
from lyapmix.sparse import as_csr, ilu0_factorize, shifted_transpose, spmm

log = logging.getLogger(__name__)

TRIPLE_LABELS = ("DDD", "SDD", "SSD", "SSS")


@dataclass(frozen=True)
class LyapunovProblem:
    """Data ``(E, A, G, S)`` of the equation, stored in double."""

    E: sp.csr_matrix
    A: sp.csr_matrix
    G: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        E = as_csr(self.E, DOUBLE)
        A = as_csr(self.A, DOUBLE)
        G = np.asarray(self.G, dtype=np.float64)
        if G.ndim == 1:
            G = G[:, None]
        S = np.atleast_2d(np.asarray(self.S, dtype=np.float64))
        n = A.shape[0]
        if A.shape != (n, n) or E.shape != (n, n):
            raise DimensionError(f"A {A.shape} and E {E.shape} must be square of equal size")
        if G.shape[0] != n:
            raise DimensionError(f"G has {G.shape[0]} rows, expected {n}")
        if S.shape != (G.shape[1], G.shape[1]):
            raise DimensionError(f"S must be {G.shape[1]}x{G.shape[1]}, got {S.shape}")
        if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(np.abs(S).max(initial=0), 1)):
            raise ValueError("S must be symmetric")
        for name, value in (("E", E), ("A", A), ("G", G), ("S", S)):
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def g(self) -> int:
        return self.G.shape[1]

    def rhs_norm(self) -> float:
        """``||G S G^T||_F`` in double."""
        return lr_norm(LDLTFactorization(self.G, self.S))

    def save(self, directory) -> Path:
        """Export as ``E.mtx``, ``A.mtx``, ``G.csv``, ``S.csv``."""
        from lyapmix.io import write_dense_csv, write_matrix_market

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_matrix_market(directory / "E.mtx", self.E)
        write_matrix_market(directory / "A.mtx", self.A)
        write_dense_csv(directory / "G.csv", self.G)
        write_dense_csv(directory / "S.csv", self.S)
        return directory

    @classmethod
    def load(cls, directory) -> "LyapunovProblem":
        from lyapmix.io import read_dense_csv, read_matrix_market

        directory = Path(directory)
        return cls(
            read_matrix_market(directory / "E.mtx"),
            read_matrix_market(directory / "A.mtx"),
            read_dense_csv(directory / "G.csv"),
            read_dense_csv(directory / "S.csv"),
        )


@dataclass(frozen=True)
class PrecisionTriple:
    z: Precision
    vr: Precision
    ty: Precision

    def __post_init__(self):
        if not (self.z.is_coarser_or_equal(self.vr) and self.vr.is_coarser_or_equal(self.ty)):
            raise ValueError(f"precisions must be ordered coarse to fine, got {self.label}")

    @property
    def label(self) -> str:
        return self.z.label + self.vr.label + self.ty.label

    @classmethod
    def from_label(cls, label: str) -> "PrecisionTriple":
        label = label.strip().upper()
        if len(label) != 3:
            raise ValueError(f"precision triple label must have three letters, got {label!r}")
        return cls(*(Precision.parse(c) for c in label))

    def __str__(self):
        return f"ADI({', '.join(self.label)})"


@dataclass(frozen=True)
class ADIOptions:
    reltol: float = 1e-8
    maxiters: int = 50
    gmres_rtol_factor: float = 100.0
    compression: bool = False
    compression_interval: int = 10
    # None: record the explicit residual every iteration when n <= 5000
    record_explicit: bool | None = None

    def __post_init__(self):
        if not self.reltol > 0:
            raise ValueError("reltol must be positive")
        if self.maxiters < 1:
            raise ValueError("maxiters must be at least 1")
        if self.compression_interval < 1:
            raise ValueError("compression_interval must be at least 1")


@dataclass(frozen=True)
class TraceRow:
    iter: int
    res_impl: float
    res_expl: float | None
    order: int
    elapsed_ns: int


@dataclass
class ADITrace:
    rows: list = field(default_factory=list)
    reason: str = ""
    shifts_used: list = field(default_factory=list)
    residual: LDLTFactorization | None = None
    compressed: bool = False

    @property
    def iterations(self) -> int:
        return len(self.rows)

    @property
    def converged(self) -> bool:
        return self.reason == "converged"

    @property
    def res_impl(self) -> float:
        return self.rows[-1].res_impl

    @property
    def res_expl(self) -> float | None:
        return self.rows[-1].res_expl

    def to_json(self) -> str:
        return json.dumps(
            {
                "reason": self.reason,
                "shifts_used": self.shifts_used,
                "rows": [row.__dict__ for row in self.rows],
            }
        )


def implicit_residual_norm(R, T) -> float:
    """``||R T R^T||_F`` in the precisions `R` and `T` are stored in."""
    R = np.asarray(R)
    if R.ndim == 1:
        R = R[:, None]
    return lr_norm(LDLTFactorization(R, T))


def explicit_residual_factors(P: LyapunovProblem, F: LDLTFactorization):
    """``(Rhat, That)`` in double with ``Rhat That Rhat^T = L(Z Y Z^T)``.

    ``Rhat = [G, E^T Z, A^T Z]`` and `That` couples the last two blocks
    through `Y`.
    """
    if F.n != P.n:
        raise DimensionError(f"factorization has n = {F.n}, problem has n = {P.n}")
    Z = F.Z.astype(np.float64)
    Y = F.Y.astype(np.float64)
    z, g = F.order, P.g
    Rhat = np.hstack([P.G, np.asarray(P.E.T @ Z), np.asarray(P.A.T @ Z)])
    That = np.zeros((g + 2 * z, g + 2 * z))
    That[:g, :g] = P.S
    That[g:g + z, g + z:] = Y
    That[g + z:, g:g + z] = Y
    return Rhat, That


def explicit_residual_norm(P: LyapunovProblem, F: LDLTFactorization) -> float:
    """``||A^T X E + E^T X A + G S G^T||_F`` for ``X = Z Y Z^T``, factored, in double."""
    Rhat, That = explicit_residual_factors(P, F)
    return lr_norm(LDLTFactorization(Rhat, That))


def kronecker_structure_check(F: LDLTFactorization, shifts_used, T) -> bool:
    """True iff ``Y == -2 diag(shifts) kron T`` exactly, in the precision of `Y`."""
    shifts_used = list(shifts_used)
    if F.order == 0:
        return not shifts_used
    T = np.atleast_2d(np.asarray(T))
    ty = F.Y.dtype
    coeff = np.array([-2 * float(a) for a in shifts_used], dtype=ty)
    expected = np.kron(np.diag(coeff), T.astype(ty))
    return F.Y.shape == expected.shape and bool(np.array_equal(F.Y, expected))


def _assemble(zblocks, yblocks, zp: Precision, yp: Precision, n: int) -> LDLTFactorization:
    if not zblocks:
        return LDLTFactorization.zeros(n, zp, yp)
    Z = np.hstack(zblocks).astype(zp.dtype, copy=False)
    Y = sla.block_diag(*yblocks).astype(yp.dtype, copy=False)
    return LDLTFactorization(Z, Y)


def adi_solve(
    P: LyapunovProblem,
    prec: PrecisionTriple,
    shifts: ShiftSet,
    opts: ADIOptions | None = None,
):
    """Run the mixed-precision low-rank ADI.

    Returns the solution factorization (``Z`` in ``prec.z``, ``Y`` in
    ``prec.ty``) and an :class:`ADITrace` with one row per iteration.
    Shifts are taken from `shifts` cyclically. The iteration stops as soon
    as ``||R T R^T|| <= reltol ||G S G^T||``, both norms evaluated in the
    mixed-precision path, or after ``maxiters`` iterations.

    Raises
    ------
    ConvergenceError
        An inner GMRES solve failed; ``iteration`` holds the ADI step.
    """
    opts = ADIOptions() if opts is None else opts
    if not isinstance(shifts, ShiftSet):
        shifts = ShiftSet(tuple(shifts))
    n = P.n
    zp, vr, ty = prec.z, prec.vr, prec.ty
    record_explicit = opts.record_explicit if opts.record_explicit is not None else n <= 5000

    A = as_csr(P.A, vr)
    E = as_csr(P.E, vr)
    Et = as_csr(E.T, vr)
    R = round_to_precision(P.G, vr)
    T = round_to_precision(P.S, ty)
    norm0 = implicit_residual_norm(R, T)
    rhs_norm = P.rhs_norm()
    gmres_rtol = opts.gmres_rtol_factor * vr.eps

    trace = ADITrace()
    zblocks: list[np.ndarray] = []
    yblocks: list[np.ndarray] = []
    operators: dict[float, tuple] = {}
    elapsed = 0
    F = LDLTFactorization.zeros(n, zp, ty)

    for k in range(opts.maxiters):
        t0 = time.perf_counter_ns()
        alpha = vr.dtype.type(shifts.cyclic(k))
        key = float(alpha)
        if key not in operators:
            M = shifted_transpose(A, E, alpha, vr)
            operators[key] = (M, ilu0_factorize(M))
        M, pc = operators[key]
        try:
            V = gmres_solve(M, R, pc, gmres_rtol, vr)
        except ConvergenceError as exc:
            exc.iteration = k
            raise
        R = R - (2 * alpha) * spmm(Et, V, vr)
        zblocks.append(round_to_precision(V, zp))
        yblocks.append(ty.dtype.type(-2 * key) * T)
        trace.shifts_used.append(key)
        res_impl = implicit_residual_norm(R, T) / norm0

        if opts.compression and (k + 1) % opts.compression_interval == 0:
            F = lr_compress(_assemble(zblocks, yblocks, zp, ty, n), CompressionOptions())
            zblocks, yblocks = [F.Z], [F.Y]
            trace.compressed = True
        elapsed += time.perf_counter_ns() - t0

        F = _assemble(zblocks, yblocks, zp, ty, n)
        res_expl = explicit_residual_norm(P, F) / rhs_norm if record_explicit else None
        trace.rows.append(TraceRow(k + 1, float(res_impl), res_expl, F.order, elapsed))
        log.debug("ADI %s iter %d: res_impl=%.3e res_expl=%s", prec.label, k + 1, res_impl, res_expl)
        if res_impl <= opts.reltol:
            trace.reason = "converged"
            break
    else:
        trace.reason = "maxiters"

    trace.residual = LDLTFactorization(R, T)
    return F, trace
