"""Storage-precision tags and the rounding rules attached to them.

Single precision is native binary32: arrays tagged SINGLE are stored as
``float32`` and every numpy/scipy kernel applied to them works in binary32.
"""

from __future__ import annotations

import enum

import numpy as np


class PrecisionRangeError(OverflowError):
    """A finite value does not fit into the target precision."""


class Precision(enum.Enum):
    SINGLE = "S"
    DOUBLE = "D"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32) if self is Precision.SINGLE else np.dtype(np.float64)

    @property
    def eps(self) -> float:
        """Machine epsilon, 2**-23 or 2**-52."""
        return float(np.finfo(self.dtype).eps)

    @property
    def label(self) -> str:
        return self.value

    @classmethod
    def of(cls, obj) -> "Precision":
        """Precision tag of an array, sparse matrix or dtype."""
        dtype = np.dtype(getattr(obj, "dtype", obj))
        if dtype == np.float32:
            return cls.SINGLE
        if dtype == np.float64:
            return cls.DOUBLE
        raise TypeError(f"no precision tag for dtype {dtype}")

    @classmethod
    def parse(cls, text: str) -> "Precision":
        key = text.strip().upper()
        for p in cls:
            if key in (p.value, p.name):
                return p
        raise ValueError(f"unknown precision {text!r}")

    def is_coarser_or_equal(self, other: "Precision") -> bool:
        return self.eps >= other.eps

    def __repr__(self) -> str:
        return f"Precision.{self.name}"


SINGLE = Precision.SINGLE
DOUBLE = Precision.DOUBLE


def finest(*precisions: Precision) -> Precision:
    """The finest (smallest epsilon) of the given tags."""
    return min(precisions, key=lambda p: p.eps)


def round_to_precision(M, p: Precision) -> np.ndarray:
    """Round every entry of `M` to the nearest value representable in `p`.

    Rounding is IEEE round-to-nearest-even, as performed by the hardware
    conversion. Finite entries that overflow binary32 raise
    :class:`PrecisionRangeError`; infinities and NaNs pass through.
    """
    M = np.asarray(M)
    if M.dtype == p.dtype:
        return M
    with np.errstate(over="ignore"):
        out = M.astype(p.dtype)
    overflow = np.isinf(out) & np.isfinite(M)
    if overflow.any():
        idx = tuple(int(i) for i in np.argwhere(overflow)[0])
        raise PrecisionRangeError(
            f"entry {idx} = {M[idx]!r} overflows {p.name.lower()} precision"
        )
    return out


def frobenius_norm(M) -> float:
    """Frobenius norm accumulated in the storage precision of `M`."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    if M.dtype.kind != "f":
        M = M.astype(np.float64)
    # scaled sum of squares; the scale keeps binary32 from overflowing
    scale = np.max(np.abs(M))
    if scale == 0 or not np.isfinite(scale):
        return float(scale)
    W = M / scale
    return float(scale * np.sqrt(np.sum(W * W, dtype=M.dtype)))
