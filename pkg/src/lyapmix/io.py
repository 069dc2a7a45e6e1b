"""File formats.

Sparse matrices
    Matrix Market coordinate format, ``real`` field, ``general`` or
    ``symmetric`` symmetry (read and written with :mod:`scipy.io`).
Dense matrices
    Headered CSV: one header line ``c0,c1,...,c{m-1}`` followed by one line
    per row. Values are written with enough digits to round-trip the
    storage precision (17 significant digits for double, 9 for single).
Shift files
    One shift per line, ``repr`` of a Python float, ``#`` starts a comment.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp


def read_matrix_market(path) -> sp.csr_matrix:
    M = scipy.io.mmread(str(path))
    if not sp.issparse(M):
        M = sp.csr_matrix(M)
    if np.iscomplexobj(M.data):
        raise ValueError(f"{path}: complex matrices are not supported")
    return sp.csr_matrix(M, dtype=np.float64)


def write_matrix_market(path, M, symmetric: bool = False) -> None:
    scipy.io.mmwrite(
        str(path), sp.coo_matrix(M), field="real", symmetry="symmetric" if symmetric else "general"
    )


def write_dense_csv(path, M) -> None:
    M = np.atleast_2d(np.asarray(M))
    fmt = "%.9g" if M.dtype == np.float32 else "%.17g"
    header = ",".join(f"c{j}" for j in range(M.shape[1]))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        if M.size:
            np.savetxt(fh, M, fmt=fmt, delimiter=",")


def read_dense_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        ncols = len(header.split(",")) if header else 0
        if ncols == 0:
            return np.zeros((0, 0))
        body = fh.read()
    if not body.strip():
        return np.zeros((0, ncols))
    data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    if data.shape[1] != ncols:
        raise ValueError(f"{path}: header names {ncols} columns, rows have {data.shape[1]}")
    return data


def write_shift_file(path, shifts) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{float(a)!r}\n" for a in shifts))
    return path


def read_shift_file(path) -> list[float]:
    shifts = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            shifts.append(float(line))
    return shifts
