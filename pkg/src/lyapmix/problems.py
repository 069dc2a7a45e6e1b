"""Test-problem generators and system-theoretic utilities.

Random data come from numpy's PCG64 generator. Each experiment draws from
its own stream: ``SeedSequence(seed, spawn_key=(crc32(experiment),))``, so
outputs are reproducible from ``(experiment, seed)`` alone.
"""

from __future__ import annotations

import re
import warnings
import zlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from lyapmix.adi import LyapunovProblem
from lyapmix.dense import dense_cap, sym_eig
from lyapmix.errors import DimensionError
from lyapmix.lowrank import CompressionOptions, LDLTFactorization, lr_compress, lr_norm, lr_to_dense
from lyapmix.precision import DOUBLE
from lyapmix.sparse import as_csr


def rng_for(experiment: str, seed: int) -> np.random.Generator:
    key = zlib.crc32(experiment.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


@dataclass(frozen=True)
class StateSpaceSystem:
    """``E x' = A x + B u``, ``y = C x``."""

    E: sp.csr_matrix
    A: sp.csr_matrix
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        E = as_csr(self.E, DOUBLE)
        A = as_csr(self.A, DOUBLE)
        B = np.asarray(self.B, dtype=np.float64)
        C = np.asarray(self.C, dtype=np.float64)
        if B.ndim == 1:
            B = B[:, None]
        if C.ndim == 1:
            C = C[None, :]
        n = A.shape[0]
        if A.shape != (n, n) or E.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
            raise DimensionError("inconsistent state-space dimensions")
        for name, value in (("E", E), ("A", A), ("B", B), ("C", C)):
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def q(self):
        return self.C.shape[0]


def _laplacian_1d(n):
    return sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="csr")


def _mass_1d(n):
    # consistent linear-element mass, scaled so that rows sum to one in the interior
    return sp.diags([np.full(n - 1, 1 / 6), np.full(n, 4 / 6), np.full(n - 1, 1 / 6)], [-1, 0, 1], format="csr")


def _interior(length, q):
    # interior index range [1, length - 1); the full range on grids too short for q pieces
    return (1, length - 1) if length - 2 >= q else (0, length)


def _patches(length, q):
    # split the interior index range into q contiguous pieces
    lo, hi = _interior(length, q)
    edges = np.linspace(lo, hi, q + 1).round().astype(int)
    return [(edges[i], edges[i + 1]) for i in range(q)]


def heat_model(grid, mass: str = "identity", m: int = 2, q: int = 2) -> StateSpaceSystem:
    """Finite-difference heat equation on a unit-spaced grid, Dirichlet boundary.

    `grid` is ``N`` (1-D) or ``(nx, ny)`` (2-D). ``A`` is the negative definite
    5-/3-point Laplacian, ``E`` the identity or a tridiagonal consistent mass
    matrix (tensorized in 2-D). Inputs are point sources at `m`
    boundary-adjacent nodes; outputs average the state over `q` interior
    patches, which leave out the boundary-adjacent layer of nodes (grids too
    short for that use the full extent).
    """
    if np.isscalar(grid):
        dims = (int(grid),)
    else:
        dims = tuple(int(d) for d in grid)
    if any(d < 1 for d in dims) or int(np.prod(dims)) < 2:
        raise ValueError(f"grid {dims} too small")
    if mass not in ("identity", "fem"):
        raise ValueError(f"unknown mass model {mass!r}")
    if len(dims) == 1:
        (nx,) = dims
        n = nx
        A = _laplacian_1d(nx)
        E = sp.identity(n, format="csr") if mass == "identity" else _mass_1d(nx)
        inputs = [0, n - 1, 1, n - 2][:m]
        strips = [list(range(a, b)) for a, b in _patches(n, q)]
    elif len(dims) == 2:
        nx, ny = dims
        n = nx * ny
        # node (i, j) -> j * nx + i
        A = (sp.kron(sp.identity(ny), _laplacian_1d(nx)) + sp.kron(_laplacian_1d(ny), sp.identity(nx))).tocsr()
        if mass == "identity":
            E = sp.identity(n, format="csr")
        else:
            E = sp.kron(_mass_1d(ny), _mass_1d(nx)).tocsr()
        mid = ny // 2
        inputs = [mid * nx, mid * nx + nx - 1, nx // 2, (ny - 1) * nx + nx // 2][:m]
        strips = [
            [j * nx + i for j in range(*_interior(ny, 1)) for i in range(a, b)] for a, b in _patches(nx, q)
        ]
    else:
        raise ValueError("grid must be 1-D or 2-D")
    if len(inputs) < m or len(set(inputs)) < m:
        raise ValueError(f"cannot place {m} inputs on grid {dims}")
    if any(len(s) == 0 for s in strips):
        raise ValueError(f"cannot split grid {dims} into {q} interior output patches")
    B = np.zeros((n, m))
    B[inputs, np.arange(m)] = 1.0
    C = np.zeros((q, n))
    for r, nodes in enumerate(strips):
        C[r, nodes] = 1.0 / len(nodes)
    return StateSpaceSystem(E, A, B, C)


@dataclass(frozen=True)
class TripleChainParams:
    length: int = 100
    k0: float = 50.0
    k1: float = 10.0
    k2: float = 20.0
    k3: float = 1.0
    m0: float = 10.0
    m1: float = 1.0
    m2: float = 2.0
    m3: float = 3.0
    alpha: float = 0.1
    beta: float = 0.1

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("chain length must be at least 1")
        if min(self.m0, self.m1, self.m2, self.m3) <= 0:
            raise ValueError("masses must be positive")


def triple_chain_matrices(p: TripleChainParams):
    """Second-order mass, damping and stiffness matrices ``(M, D, K)``.

    Three chains of `length` masses each. In chain ``i`` every mass is tied
    to its neighbours by springs of stiffness ``k_i``; the first mass is tied
    to the wall and the last one to the connector mass ``m0``, which is tied
    to the wall by ``k0``. The connector is the last degree of freedom.
    Damping is Rayleigh, ``D = alpha M + beta K``.
    """
    ell = p.length
    masses = np.concatenate([np.full(ell, p.m1), np.full(ell, p.m2), np.full(ell, p.m3), [p.m0]])
    M = sp.diags(masses, format="csr")
    blocks = []
    coupling = []
    for k in (p.k1, p.k2, p.k3):
        blocks.append(k * _laplacian_1d(ell) * -1)
        c = np.zeros(ell)
        c[-1] = -k
        coupling.append(c)
    K = sp.lil_matrix((3 * ell + 1, 3 * ell + 1))
    K[: 3 * ell, : 3 * ell] = sp.block_diag(blocks)
    col = np.concatenate(coupling)
    K[: 3 * ell, 3 * ell] = col[:, None]
    K[3 * ell, : 3 * ell] = col[None, :]
    K[3 * ell, 3 * ell] = p.k0 + p.k1 + p.k2 + p.k3
    K = K.tocsr()
    D = (p.alpha * M + p.beta * K).tocsr()
    return M, D, K


def triple_chain(p: TripleChainParams | None = None) -> StateSpaceSystem:
    """First-order companion form ``E = diag(I, M)``, ``A = [[0, I], [-K, -D]]``.

    Input is a force on the connector mass, output its position.
    """
    p = TripleChainParams() if p is None else p
    M, D, K = triple_chain_matrices(p)
    nh = M.shape[0]
    I = sp.identity(nh, format="csr")
    E = sp.block_diag([I, M], format="csr")
    A = sp.bmat([[None, I], [-K, -D]], format="csr")
    B = np.zeros((2 * nh, 1))
    B[2 * nh - 1, 0] = 1.0
    C = np.zeros((1, 2 * nh))
    C[0, nh - 1] = 1.0
    return StateSpaceSystem(E, A, B, C)


_SPEC_RE = {
    "heat1d": re.compile(r"^heat1d:(\d+)(?::(identity|fem))?$"),
    "heat2d": re.compile(r"^heat2d:(\d+)x(\d+)(?::(identity|fem))?$"),
    "triplechain": re.compile(r"^triplechain:(\d+)$"),
}


def system_from_spec(spec: str) -> StateSpaceSystem:
    """Build a system from ``heat1d:N``, ``heat2d:NXxNY`` or ``triplechain:L``.

    Heat specs accept an optional ``:fem`` suffix for the tridiagonal mass.
    """
    spec = spec.strip().lower()
    if mt := _SPEC_RE["heat1d"].match(spec):
        return heat_model(int(mt.group(1)), mass=mt.group(2) or "identity")
    if mt := _SPEC_RE["heat2d"].match(spec):
        return heat_model((int(mt.group(1)), int(mt.group(2))), mass=mt.group(3) or "identity")
    if mt := _SPEC_RE["triplechain"].match(spec):
        return triple_chain(TripleChainParams(length=int(mt.group(1))))
    raise ValueError(f"unknown problem spec {spec!r}; expected heat1d:N, heat2d:NXxNY or triplechain:L")


def gramian_problem(sys: StateSpaceSystem) -> LyapunovProblem:
    """Observability Gramian equation: ``G = C^T``, ``S = I_q``."""
    return LyapunovProblem(sys.E, sys.A, sys.C.T.copy(), np.eye(sys.q))


def h2_norm(sys: StateSpaceSystem, Q: LDLTFactorization) -> float:
    """``sqrt(trace(B^T Q B))`` from the factors of `Q`, never assembling it."""
    if Q.order == 0:
        return 0.0
    W = sys.B.T @ Q.Z.astype(np.float64)
    tr = float(np.sum((W @ Q.Y.astype(np.float64)) * W))
    if tr < 0:
        warnings.warn(f"negative trace {tr:.3e} clamped to zero", RuntimeWarning, stacklevel=2)
        tr = 0.0
    return float(np.sqrt(tr))


def _is_indefinite(S) -> bool:
    w, _ = sym_eig(S)
    return bool(w.max() > 0 and w.min() < 0)


def random_rhs_problem(sys: StateSpaceSystem, g: int, seed: int) -> LyapunovProblem:
    """Random ``G`` (``n x g``, standard normal) and dense symmetric ``S``.

    ``S = (W + W^T) / 2`` with standard normal ``W``. For ``g >= 2`` a
    semidefinite draw is replaced once by a draw from the next seed.
    """
    if not 1 <= g <= 50:
        raise ValueError(f"rank g must lie in 1..50, got {g}")

    def draw(s):
        rng = rng_for("random-rhs", s)
        G = rng.standard_normal((sys.n, g))
        W = rng.standard_normal((g, g))
        return G, (W + W.T) / 2

    G, S = draw(seed)
    if g >= 2 and not _is_indefinite(S):
        G, S = draw(seed + 1)
    return LyapunovProblem(sys.E, sys.A, G, S)


def known_solution_problem(sys: StateSpaceSystem, zhat: int, seed: int):
    """Equation with the prescribed solution ``Xhat = Zhat Yhat Zhat^T``.

    ``G = [E^T Zhat, A^T Zhat]`` and ``S = -[[0, Yhat], [Yhat, 0]]`` make
    ``L(Xhat) = 0``; ``(G, S)`` is then compressed in double. Returns the
    problem and ``Xhat``.
    """
    if zhat < 1:
        raise ValueError("zhat must be at least 1")
    rng = rng_for("random-sol", seed)
    Zh = rng.standard_normal((sys.n, zhat))
    W = rng.standard_normal((zhat, zhat))
    Yh = (W + W.T) / 2
    G = np.hstack([np.asarray(sys.E.T @ Zh), np.asarray(sys.A.T @ Zh)])
    S = -np.block([[np.zeros((zhat, zhat)), Yh], [Yh, np.zeros((zhat, zhat))]])
    rhs = lr_compress(LDLTFactorization(G, S), CompressionOptions(qr_precision=DOUBLE, inner_precision=DOUBLE))
    return LyapunovProblem(sys.E, sys.A, rhs.Z, rhs.Y), LDLTFactorization(Zh, Yh)


def solution_error(Xhat: LDLTFactorization, X: LDLTFactorization) -> float:
    """``||X - Xhat||_F / ||Xhat||_F`` in double.

    Dense for ``n`` up to the oracle cap, factored through
    ``[Z, Zhat] diag(Y, -Yhat) [Z, Zhat]^T`` above it.
    """
    if Xhat.n != X.n:
        raise DimensionError(f"size mismatch: {Xhat.n} vs {X.n}")
    if Xhat.order == 0:
        raise ZeroDivisionError("reference solution is zero; relative error undefined")
    if Xhat.n <= dense_cap():
        ref = lr_to_dense(Xhat)
        denom = np.linalg.norm(ref)
        if denom == 0:
            raise ZeroDivisionError("reference solution is zero; relative error undefined")
        return float(np.linalg.norm(lr_to_dense(X) - ref) / denom)
    return solution_error_factored(Xhat, X)


def solution_error_factored(Xhat: LDLTFactorization, X: LDLTFactorization) -> float:
    Xh = Xhat.astype(DOUBLE)
    Xd = X.astype(DOUBLE)
    denom = lr_norm(Xh)
    if denom == 0:
        raise ZeroDivisionError("reference solution is zero; relative error undefined")
    diff = LDLTFactorization(
        np.hstack([Xd.Z, Xh.Z]),
        np.block([
            [Xd.Y, np.zeros((Xd.order, Xh.order))],
            [np.zeros((Xh.order, Xd.order)), -Xh.Y],
        ]),
    )
    return lr_norm(diff) / denom
