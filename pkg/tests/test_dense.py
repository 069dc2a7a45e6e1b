import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from lyapmix.dense import dense_cap, dense_lyap_oracle, householder_qr_pivoted, lyapunov_operator, sym_eig
from lyapmix.errors import OracleSizeError, SingularEquationError
from lyapmix.precision import DOUBLE, SINGLE


def test_qr_identity():
    Q, R, perm = householder_qr_pivoted(np.eye(3))
    assert np.allclose(np.abs(Q), np.eye(3))
    assert np.allclose(np.abs(np.diag(R)), 1.0)
    assert sorted(perm) == [0, 1, 2]


def test_qr_rank_one():
    v = np.ones(2) / np.sqrt(2)
    Z = np.column_stack([v, v])
    Q, R, perm = householder_qr_pivoted(Z)
    assert abs(R[1, 1]) <= DOUBLE.eps * np.linalg.norm(Z)
    assert np.isclose(abs(R[0, 0]), 1.0) and np.isclose(abs(R[0, 1]), 1.0)


def test_qr_random_reconstruction(rng):
    Z = rng.standard_normal((50, 8))
    Q, R, perm = householder_qr_pivoted(Z)
    assert np.linalg.norm(Q @ R - Z[:, perm]) <= 1e-13 * np.linalg.norm(Z)


@pytest.mark.parametrize("p", [SINGLE, DOUBLE])
@given(seed=st.integers(0, 2**31 - 1), m=st.integers(1, 40), k=st.integers(1, 12))
def test_qr_properties(p, seed, m, k):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((m, k)).astype(p.dtype)
    Q, R, perm = householder_qr_pivoted(Z)
    assert Q.dtype == p.dtype and R.dtype == p.dtype
    r = min(m, k)
    assert np.linalg.norm(Q.T @ Q - np.eye(Q.shape[1])) <= 10 * p.eps * np.sqrt(k)
    assert np.linalg.norm(Q @ R - Z[:, perm]) <= 10 * p.eps * np.linalg.norm(Z) * np.sqrt(k)
    assert np.allclose(np.tril(R, -1), 0)
    d = np.abs(np.diag(R))[:r]
    assert np.all(d[:-1] >= d[1:] * (1 - 10 * p.eps))


def test_qr_tie_breaks_to_lowest_index():
    _, _, perm = householder_qr_pivoted(np.eye(4))
    assert list(perm) == [0, 1, 2, 3]


def test_sym_eig_diag():
    w, V = sym_eig(np.diag([3.0, -1.0]))
    assert np.allclose(w, [3.0, -1.0])
    assert np.allclose(np.abs(V), np.eye(2))


def test_sym_eig_swap():
    w, V = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(w, [1.0, -1.0])
    assert np.allclose(np.abs(V), np.full((2, 2), 1 / np.sqrt(2)))
    assert np.sign(V[0, 1]) != np.sign(V[1, 1])


def test_sym_eig_random_12(rng):
    W = rng.standard_normal((12, 12))
    S = (W + W.T) / 2
    w, V = sym_eig(S)
    assert np.linalg.norm(S @ V - V * w) <= 1e-12 * np.linalg.norm(S)


@pytest.mark.parametrize("p", [SINGLE, DOUBLE])
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 25))
def test_sym_eig_properties(p, seed, n):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n, n))
    S = ((W + W.T) / 2).astype(p.dtype)
    w, V = sym_eig(S)
    nS = np.linalg.norm(S.astype(np.float64))
    Sd, Vd = S.astype(np.float64), V.astype(np.float64)
    assert np.linalg.norm(Sd @ Vd - Vd * w) <= 50 * p.eps * nS
    assert np.linalg.norm(Vd.T @ Vd - np.eye(n)) <= 50 * p.eps * np.sqrt(n)
    assert np.linalg.norm(Vd * w @ Vd.T - Sd) <= 100 * p.eps * nS
    assert np.all(np.abs(w[:-1]) >= np.abs(w[1:]))


def test_sym_eig_backends_agree(backend, rng):
    W = rng.standard_normal((9, 9))
    S = (W + W.T) / 2
    w, _ = sym_eig(S, backend=backend)
    ref = np.linalg.eigvalsh(S)
    assert np.allclose(np.sort(w), ref, rtol=0, atol=1e-13 * np.abs(ref).max())


def test_oracle_scalar():
    X = dense_lyap_oracle(np.eye(1), -np.eye(1), np.ones((1, 1)), 2 * np.eye(1))
    assert np.allclose(X, 1.0)


def test_oracle_half_identity():
    X = dense_lyap_oracle(np.eye(2), -0.5 * np.eye(2), np.eye(2), np.eye(2))
    assert np.allclose(X, np.eye(2))


@pytest.mark.parametrize("n", [8, 45])
def test_oracle_residual_and_symmetry(rng, n):
    W = rng.standard_normal((n, n))
    A = -(W @ W.T + n * np.eye(n))
    G = rng.standard_normal((n, 2))
    S = np.array([[1.0, 0.3], [0.3, -2.0]])
    X = dense_lyap_oracle(np.eye(n), A, G, S)
    GSG = G @ S @ G.T
    assert np.linalg.norm(lyapunov_operator(np.eye(n), A, X) + GSG) <= 1e-11 * np.linalg.norm(GSG)
    assert np.linalg.norm(X - X.T) <= DOUBLE.eps * np.linalg.norm(X)


def test_oracle_generalized_sparse_path(rng):
    # n^2 > 1600 takes the sparse LU route
    n = 50
    A = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1])
    E = sp.diags([np.ones(n - 1) / 6, 4 * np.ones(n) / 6, np.ones(n - 1) / 6], [-1, 0, 1])
    G = rng.standard_normal((n, 1))
    X = dense_lyap_oracle(E, A, G, np.eye(1))
    res = lyapunov_operator(E.toarray(), A.toarray(), X) + G @ G.T
    assert np.linalg.norm(res) <= 1e-11 * np.linalg.norm(G @ G.T)


def test_oracle_errors(monkeypatch):
    with pytest.raises(SingularEquationError):
        # A = diag(1, -1): eigenvalues sum to zero, L is singular
        dense_lyap_oracle(np.eye(2), np.diag([1.0, -1.0]), np.eye(2), np.eye(2))
    with pytest.raises(OracleSizeError):
        dense_lyap_oracle(np.eye(3), -np.eye(3), np.eye(3), np.eye(3), cap=2)
    monkeypatch.setenv("LYAPMIX_DENSE_CAP", "7")
    assert dense_cap() == 7
