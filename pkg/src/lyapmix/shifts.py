"""ADI shift parameters: Penzl's heuristic on Arnoldi Ritz values.

Only real negative shifts are produced; complex Ritz values are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from lyapmix.errors import UnusableSpectrumError
from lyapmix.io import read_shift_file, write_shift_file
from lyapmix.krylov import gmres_solve
from lyapmix.precision import DOUBLE
from lyapmix.sparse import as_csr, ilu0_factorize

# tolerance of the inner solves with E and A during the Arnoldi runs
INNER_RTOL = 1e-12


@dataclass(frozen=True)
class ShiftSet:
    """Ordered real negative shifts, reused cyclically by the ADI."""

    shifts: tuple

    def __post_init__(self):
        shifts = tuple(float(a) for a in self.shifts)
        if not shifts:
            raise ValueError("a shift set needs at least one shift")
        bad = [a for a in shifts if not (np.isfinite(a) and a < 0)]
        if bad:
            raise ValueError(f"shifts must be finite and strictly negative, got {bad}")
        object.__setattr__(self, "shifts", shifts)

    def __len__(self):
        return len(self.shifts)

    def __iter__(self):
        return iter(self.shifts)

    def __getitem__(self, k):
        return self.shifts[k]

    def cyclic(self, k: int) -> float:
        return self.shifts[k % len(self.shifts)]

    def save(self, path):
        return write_shift_file(path, self.shifts)

    @classmethod
    def load(cls, path) -> "ShiftSet":
        return cls(tuple(read_shift_file(path)))


def arnoldi_ritz(apply, v0, steps: int) -> np.ndarray:
    """Ritz values from `steps` Arnoldi steps of the operator `apply`.

    Stops early when the Krylov space becomes invariant.
    """
    n = v0.shape[0]
    steps = min(steps, n)
    V = np.zeros((n, steps + 1))
    H = np.zeros((steps + 1, steps))
    V[:, 0] = v0 / np.linalg.norm(v0)
    m = steps
    for j in range(steps):
        w = apply(V[:, j])
        wnorm = np.linalg.norm(w)
        for _ in range(2):
            h = V[:, : j + 1].T @ w
            w = w - V[:, : j + 1] @ h
            H[: j + 1, j] += h
        H[j + 1, j] = np.linalg.norm(w)
        if H[j + 1, j] <= 100 * np.finfo(float).eps * wnorm:
            m = j + 1
            break
        V[:, j + 1] = w / H[j + 1, j]
    return sla.eigvals(H[:m, :m])


def _real_negative(values) -> np.ndarray:
    values = np.asarray(values)
    real = np.abs(values.imag) <= 1e-8 * np.abs(values)
    out = values.real[real]
    return out[out < 0]


def adi_rational(shifts, points) -> np.ndarray:
    """``|prod_j (t - a_j) / (t + a_j)|`` at each point `t`."""
    points = np.asarray(points, dtype=float)
    vals = np.ones_like(points)
    for a in shifts:
        vals *= np.abs((points - a) / (points + a))
    return vals


def penzl_select(candidates, J: int) -> list[float]:
    """Greedy shift selection from real negative candidates.

    The first shift minimizes the maximum of the single-shift ADI function
    over the candidates. Each following shift is the candidate where the
    function of the shifts chosen so far is largest. Ties go to the lowest
    candidate index.
    """
    cand = np.unique(np.asarray(candidates, dtype=float))
    if cand.size == 0:
        raise UnusableSpectrumError("no real negative Ritz values")
    worst = np.array([adi_rational([a], cand).max() for a in cand])
    chosen = [float(cand[int(np.argmin(worst))])]
    while len(chosen) < J:
        vals = adi_rational(chosen, cand)
        i = int(np.argmax(vals))
        if vals[i] == 0:
            break
        chosen.append(float(cand[i]))
    return chosen


def penzl_shifts(E, A, kplus: int, kminus: int, J: int, seed: int = 0) -> ShiftSet:
    """Penzl's heuristic shifts for the pencil ``(A, E)``.

    `kplus` Arnoldi steps with ``E^{-1} A`` approximate the eigenvalues of
    largest magnitude; `kminus` steps with ``A^{-1} E`` give inverted Ritz
    values approximating the smallest ones. The linear solves use GMRES with
    an ILU(0) preconditioner, in double precision. The start vector is drawn
    from a PCG64 stream seeded with `seed`.
    """
    E = as_csr(E, DOUBLE)
    A = as_csr(A, DOUBLE)
    n = A.shape[0]
    v0 = np.random.default_rng(seed).standard_normal(n)

    pc_E = ilu0_factorize(E)
    pc_A = ilu0_factorize(A)

    def apply_f(v):
        return gmres_solve(E, A @ v, pc_E, INNER_RTOL, DOUBLE)

    def apply_finv(v):
        return gmres_solve(A, E @ v, pc_A, INNER_RTOL, DOUBLE)

    ritz = []
    if kplus > 0:
        ritz.append(arnoldi_ritz(apply_f, v0, kplus))
    if kminus > 0:
        inv = arnoldi_ritz(apply_finv, v0, kminus)
        ritz.append(1 / inv[inv != 0])
    candidates = _real_negative(np.concatenate(ritz) if ritz else np.zeros(0))
    return ShiftSet(tuple(penzl_select(candidates, J)))
