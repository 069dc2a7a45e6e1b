import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyapmix.errors import DimensionError
from lyapmix.lowrank import (
    CompressionOptions,
    LDLTFactorization,
    lr_compress,
    lr_concat,
    lr_from_dense,
    lr_norm,
    lr_to_dense,
)
from lyapmix.precision import DOUBLE, SINGLE, round_to_precision


def random_factor(rng, n, z, p=DOUBLE):
    W = rng.standard_normal((z, z))
    return LDLTFactorization(rng.standard_normal((n, z)).astype(p.dtype), ((W + W.T) / 2))


def test_zero_factorization():
    F = LDLTFactorization.zeros(4, SINGLE, DOUBLE)
    assert F.order == 0 and F.n == 4
    assert F.z_precision is SINGLE and F.y_precision is DOUBLE
    assert not lr_to_dense(F).any()
    assert lr_norm(F) == 0.0
    assert lr_compress(F) is F


def test_shape_validation():
    with pytest.raises(DimensionError):
        LDLTFactorization(np.ones((3, 2)), np.ones((3, 3)))
    with pytest.raises(DimensionError):
        LDLTFactorization(np.ones(3), np.ones((1, 1)))


def test_from_dense_identity():
    F = lr_from_dense(np.eye(2), tol=0)
    assert F.order == 2
    assert np.allclose(lr_to_dense(F), np.eye(2), atol=1e-15)


def test_from_dense_rank_one():
    v = np.array([1.0, 2.0, -1.0])
    assert lr_from_dense(np.outer(v, v), tol=1e-12).order == 1


def test_from_dense_rank_three(rng):
    U = rng.standard_normal((20, 3))
    X = U @ np.diag([2.0, -1.0, 0.5]) @ U.T
    F = lr_from_dense(X, tol=1e-12)
    assert F.order == 3
    assert np.linalg.norm(lr_to_dense(F) - X) <= 1e-12 * np.linalg.norm(X)


def test_to_dense_diag():
    D = np.diag([1.0, -2.0, 3.0])
    assert np.array_equal(lr_to_dense(LDLTFactorization(np.eye(3), D)), D)


def test_to_dense_matches_loops(rng):
    F = random_factor(rng, 7, 3)
    ref = np.zeros((7, 7))
    for i in range(7):
        for j in range(7):
            for a in range(3):
                for b in range(3):
                    ref[i, j] += F.Z[i, a] * F.Y[a, b] * F.Z[j, b]
    assert np.allclose(lr_to_dense(F), ref, rtol=0, atol=20 * DOUBLE.eps * np.abs(ref).max())


def test_to_dense_is_double_for_single_factors(rng):
    F = random_factor(rng, 5, 2).astype(SINGLE)
    assert lr_to_dense(F).dtype == np.float64


def test_norm_small_cases():
    assert np.isclose(lr_norm(LDLTFactorization(np.eye(2), np.eye(2))), np.sqrt(2))
    assert np.isclose(lr_norm(LDLTFactorization(np.ones((2, 1)), np.ones((1, 1)))), 2.0)


def test_norm_random_30x4(rng):
    F = random_factor(rng, 30, 4)
    ref = np.linalg.norm(lr_to_dense(F))
    assert abs(lr_norm(F) - ref) <= 1e-12 * ref


@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 100), z=st.integers(1, 12))
def test_norm_matches_dense(seed, n, z):
    F = random_factor(np.random.default_rng(seed), n, z)
    ref = np.linalg.norm(lr_to_dense(F))
    assert abs(lr_norm(F) - ref) <= 1e-12 * max(ref, 1e-300)


def test_norm_single_factor_close(rng):
    F = random_factor(rng, 40, 5).astype(SINGLE, DOUBLE)
    ref = np.linalg.norm(lr_to_dense(F))
    assert abs(lr_norm(F) - ref) <= 1e-5 * ref


def test_concat_onto_empty(rng):
    V = rng.standard_normal((6, 2))
    Yb = np.array([[1.0, 0.5], [0.5, -1.0]])
    F = lr_concat(LDLTFactorization.zeros(6), V, Yb)
    assert np.array_equal(F.Z, V) and np.array_equal(F.Y, Yb)


def test_concat_twice_block_diagonal(rng):
    V1, V2 = rng.standard_normal((6, 2)), rng.standard_normal((6, 1))
    F = lr_concat(lr_concat(LDLTFactorization.zeros(6), V1, 2 * np.eye(2)), V2, [[3.0]])
    assert F.order == 3
    assert np.array_equal(F.Z, np.hstack([V1, V2]))
    assert np.array_equal(F.Y, np.diag([2.0, 2.0, 3.0]))
    ref = 2 * V1 @ V1.T + 3 * V2 @ V2.T
    assert np.allclose(lr_to_dense(F), ref)


def test_concat_rounds_to_single(rng):
    V = rng.standard_normal((5, 2))
    F = lr_concat(LDLTFactorization.zeros(5, SINGLE, DOUBLE), V, np.eye(2))
    assert F.Z.dtype == np.float32
    assert np.array_equal(F.Z, round_to_precision(V, SINGLE))


def test_concat_dimension_errors(rng):
    F = random_factor(rng, 5, 2)
    with pytest.raises(DimensionError):
        lr_concat(F, np.ones((4, 1)), [[1.0]])
    with pytest.raises(DimensionError):
        lr_concat(F, np.ones((5, 2)), [[1.0]])


def test_compress_exact_rank_one():
    v = np.ones(2) / np.sqrt(2)
    F = LDLTFactorization(np.column_stack([v, v]), np.eye(2))
    G = lr_compress(F)
    assert G.order == 1
    assert np.allclose(lr_to_dense(G), lr_to_dense(F))


def test_compress_three_dominant(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((40, 10)))
    lam = np.concatenate([[3.0, -2.0, 1.0], 1e-14 * rng.standard_normal(7)])
    M = rng.standard_normal((10, 10))
    # hide the structure behind a non-orthogonal basis
    F = LDLTFactorization(Q @ M, np.linalg.inv(M) @ np.diag(lam) @ np.linalg.inv(M).T)
    G = lr_compress(F, CompressionOptions(rtol=1e-10))
    assert G.order == 3
    X = lr_to_dense(F)
    assert np.linalg.norm(lr_to_dense(G) - X) <= 1e-9 * np.linalg.norm(X)


def test_compress_orthonormal_and_indefinite(rng):
    F = random_factor(rng, 30, 6)
    G = lr_compress(F, CompressionOptions(rtol=0.0))
    assert np.allclose(G.Z.T @ G.Z, np.eye(G.order), atol=1e-13)
    assert np.count_nonzero(np.diag(G.Y) < 0) > 0
    assert np.allclose(G.Y, np.diag(np.diag(G.Y)))


def test_compress_truncates_everything():
    F = LDLTFactorization(np.zeros((4, 2)), np.eye(2))
    assert lr_compress(F).order == 0


def test_compression_options_validation():
    with pytest.raises(ValueError):
        CompressionOptions(rtol=1.0)
    with pytest.raises(ValueError):
        CompressionOptions(rtol=-1e-3)


@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 60), z=st.integers(1, 10))
def test_compress_reconstruction(seed, n, z):
    rng = np.random.default_rng(seed)
    F = random_factor(rng, n, z)
    X = lr_to_dense(F)
    nF = np.linalg.norm(X)
    G0 = lr_compress(F, CompressionOptions(rtol=0.0))
    assert G0.order <= F.order
    assert np.linalg.norm(lr_to_dense(G0) - X) <= 100 * DOUBLE.eps * nF * np.sqrt(z)
    G = lr_compress(F, CompressionOptions(rtol=1e-12))
    assert G.order <= min(n, z)
    assert np.linalg.norm(lr_to_dense(G) - X) <= max(10 * 1e-12, 100 * DOUBLE.eps) * nF * np.sqrt(z)


def test_compress_keeps_storage_precisions(rng):
    F = random_factor(rng, 20, 4).astype(SINGLE, DOUBLE)
    G = lr_compress(F)
    assert G.Z.dtype == np.float32 and G.Y.dtype == np.float64


def test_save_load_round_trip(tmp_path, rng):
    for F in (random_factor(rng, 6, 3), random_factor(rng, 6, 2).astype(SINGLE, DOUBLE)):
        F.save(tmp_path / "f")
        G = LDLTFactorization.load(tmp_path / "f")
        assert G.Z.dtype == F.Z.dtype and G.Y.dtype == F.Y.dtype
        assert np.array_equal(G.Z, F.Z) and np.array_equal(G.Y, F.Y)
    LDLTFactorization.zeros(3).save(tmp_path / "z")
    assert LDLTFactorization.load(tmp_path / "z").order == 0
