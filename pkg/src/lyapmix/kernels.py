"""Backend selection for the hot inner loops.

The Cython extension ``lyapmix._ckernels`` is used when it has been built;
otherwise, or when ``LYAPMIX_KERNELS=python`` is set, the pure-Python
implementations from ``lyapmix._pykernels`` are used. Both expose

``ilu0_factor(indptr, indices, lu, diag) -> int``
    in-place ILU(0) on CSR values, returns -1 or the zero-pivot row;
``ilu0_solve(indptr, indices, lu, diag, x) -> None``
    in-place forward/back substitution;
``jacobi_eigh(a, v, tol, max_sweeps) -> int``
    in-place cyclic Jacobi, returns sweeps used.
"""

import os

from lyapmix import _pykernels

_requested = os.environ.get("LYAPMIX_KERNELS", "auto").lower()

BACKENDS = {"python": _pykernels}
try:
    from lyapmix import _ckernels

    BACKENDS["cython"] = _ckernels
except ImportError:
    if _requested == "cython":
        raise

BACKEND = "cython" if "cython" in BACKENDS and _requested != "python" else "python"
_impl = BACKENDS[BACKEND]


def get_backend(name=None):
    """Kernel module by name (``"cython"`` or ``"python"``); default is the active one."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None


ilu0_factor = _impl.ilu0_factor
ilu0_solve = _impl.ilu0_solve
jacobi_eigh = _impl.jacobi_eigh
