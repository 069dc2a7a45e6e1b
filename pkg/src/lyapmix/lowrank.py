"""Symmetric indefinite low-rank factorizations ``X = Z Y Z^T``.

`Z` is tall and skinny, `Y` small and symmetric. Each factor carries its own
storage precision (the dtype of the array). The order ``z`` is the number of
columns of `Z`; it bounds the rank of the product from above.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from lyapmix.dense import householder_qr_pivoted, sym_eig
from lyapmix.errors import DimensionError
from lyapmix.precision import DOUBLE, Precision, finest, frobenius_norm, round_to_precision


@dataclass(frozen=True)
class LDLTFactorization:
    Z: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z)
        Y = np.atleast_2d(np.asarray(self.Y))
        if Z.ndim != 2:
            raise DimensionError(f"Z must be a matrix, got shape {Z.shape}")
        if Z.shape[1] == 0 and Y.size == 0:
            Y = np.zeros((0, 0), dtype=Y.dtype if Y.dtype.kind == "f" else Z.dtype)
        if Y.shape != (Z.shape[1], Z.shape[1]):
            raise DimensionError(f"Y must be {Z.shape[1]}x{Z.shape[1]}, got {Y.shape}")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def zeros(cls, n: int, z_precision: Precision = DOUBLE, y_precision: Precision = DOUBLE):
        """The order-0 factorization of the ``n x n`` zero matrix."""
        return cls(np.zeros((n, 0), dtype=z_precision.dtype), np.zeros((0, 0), dtype=y_precision.dtype))

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def order(self) -> int:
        return self.Z.shape[1]

    @property
    def z_precision(self) -> Precision:
        return Precision.of(self.Z)

    @property
    def y_precision(self) -> Precision:
        return Precision.of(self.Y)

    def astype(self, z_precision: Precision, y_precision: Precision | None = None):
        y_precision = z_precision if y_precision is None else y_precision
        return LDLTFactorization(
            round_to_precision(self.Z, z_precision), round_to_precision(self.Y, y_precision)
        )

    def save(self, directory) -> Path:
        """Write ``Z.csv``, ``Y.csv`` and ``meta.json`` into `directory`."""
        from lyapmix.io import write_dense_csv

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_dense_csv(directory / "Z.csv", self.Z)
        write_dense_csv(directory / "Y.csv", self.Y)
        meta = {
            "n": self.n,
            "order": self.order,
            "z_precision": self.z_precision.label,
            "y_precision": self.y_precision.label,
        }
        (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
        return directory

    @classmethod
    def load(cls, directory) -> "LDLTFactorization":
        from lyapmix.io import read_dense_csv

        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        zp = Precision.parse(meta["z_precision"])
        yp = Precision.parse(meta["y_precision"])
        n, order = int(meta["n"]), int(meta["order"])
        if order == 0:
            return cls.zeros(n, zp, yp)
        Z = read_dense_csv(directory / "Z.csv").reshape(n, order)
        Y = read_dense_csv(directory / "Y.csv").reshape(order, order)
        return cls(round_to_precision(Z, zp), round_to_precision(Y, yp))


def lr_from_dense(X, tol: float = 0.0) -> LDLTFactorization:
    """Factor a symmetric matrix, keeping eigenpairs with ``|lambda| > tol |lambda|_max``."""
    X = np.asarray(X, dtype=np.float64)
    w, V = sym_eig(X)
    if w.size == 0 or w[0] == 0:
        return LDLTFactorization.zeros(X.shape[0])
    keep = np.abs(w) > tol * abs(w[0])
    return LDLTFactorization(V[:, keep].copy(), np.diag(w[keep]))


def lr_to_dense(F: LDLTFactorization) -> np.ndarray:
    """Assemble ``Z Y Z^T`` in double regardless of the factor precisions."""
    Z = F.Z.astype(np.float64)
    return Z @ F.Y.astype(np.float64) @ Z.T


def _inner_factor(F: LDLTFactorization, qr_precision: Precision, want_q: bool):
    """``Z = Q Zhat`` by pivoted QR in `qr_precision`; returns ``(Q, Zhat)``."""
    Z = round_to_precision(F.Z, qr_precision)
    Q, Rhat, perm = householder_qr_pivoted(Z, want_q=want_q)
    Zhat = np.empty_like(Rhat)
    Zhat[:, perm] = Rhat
    return Q, Zhat


def lr_norm(F: LDLTFactorization) -> float:
    """Frobenius norm of ``Z Y Z^T`` without assembling it.

    `Z` is reduced by a pivoted QR in its own precision; the small product
    ``Zhat Y Zhat^T`` is then formed in the finer of the two factor
    precisions.
    """
    if F.order == 0:
        return 0.0
    _, Zhat = _inner_factor(F, F.z_precision, want_q=False)
    p = finest(F.z_precision, F.y_precision)
    Zhat = round_to_precision(Zhat, p)
    Y = round_to_precision(F.Y, p)
    return frobenius_norm(Zhat @ Y @ Zhat.T)


def lr_concat(F: LDLTFactorization, V, Yblock) -> LDLTFactorization:
    """Append columns `V` to `Z` and the block `Yblock` to `Y`.

    The new pieces are rounded to the precisions of `F`.
    """
    V = np.asarray(V)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] != F.n:
        raise DimensionError(f"V has {V.shape[0]} rows, expected {F.n}")
    Yblock = np.atleast_2d(np.asarray(Yblock))
    if Yblock.shape != (V.shape[1], V.shape[1]):
        raise DimensionError(f"Yblock must be {V.shape[1]}x{V.shape[1]}, got {Yblock.shape}")
    Z = np.hstack([F.Z, round_to_precision(V, F.z_precision)])
    Y = sla.block_diag(F.Y, round_to_precision(Yblock, F.y_precision)).astype(F.Y.dtype)
    return LDLTFactorization(Z, Y)


@dataclass(frozen=True)
class CompressionOptions:
    """Truncation settings. ``None`` precisions default to the factor's own.

    ``rtol=None`` selects ``z * eps`` of the QR precision.
    """

    rtol: float | None = None
    qr_precision: Precision | None = None
    inner_precision: Precision | None = None

    def __post_init__(self):
        if self.rtol is not None and not 0 <= self.rtol < 1:
            raise ValueError(f"truncation tolerance must lie in [0, 1), got {self.rtol}")


def lr_compress(F: LDLTFactorization, opts: CompressionOptions | None = None) -> LDLTFactorization:
    """Truncate `F` to its numerical rank.

    Pivoted QR ``Z = Q Zhat``, then an eigendecomposition of
    ``sym(Zhat Y Zhat^T)``; eigenpairs with ``|lambda| <= rtol |lambda|_max``
    are dropped. The result has ``Z = Q W`` (orthonormal columns) and
    diagonal, possibly indefinite, `Y`. Output factors keep the storage
    precisions of `F`.
    """
    opts = CompressionOptions() if opts is None else opts
    zp, yp = F.z_precision, F.y_precision
    if F.order == 0:
        return F
    qp = opts.qr_precision or zp
    ip = opts.inner_precision or yp
    rtol = F.order * qp.eps if opts.rtol is None else opts.rtol
    Q, Zhat = _inner_factor(F, qp, want_q=True)
    Zhat = round_to_precision(Zhat, ip)
    inner = Zhat @ round_to_precision(F.Y, ip) @ Zhat.T
    w, W = sym_eig((inner + inner.T) / 2)
    if w.size == 0 or w[0] == 0:
        return LDLTFactorization.zeros(F.n, zp, yp)
    keep = np.abs(w) > rtol * abs(w[0])
    if not keep.any():
        return LDLTFactorization.zeros(F.n, zp, yp)
    p = finest(qp, ip)
    Znew = round_to_precision(Q, p) @ round_to_precision(W[:, keep], p)
    return LDLTFactorization(round_to_precision(Znew, zp), round_to_precision(np.diag(w[keep]), yp))
