import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, settings

from lyapmix.kernels import BACKENDS

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def laplacian_1d(n):
    return sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="csr")


def random_diag_dominant(rng, n, density=0.2):
    M = sp.random(n, n, density=density, random_state=rng, format="csr")
    M.data = rng.standard_normal(M.nnz)
    rowsum = np.asarray(abs(M).sum(axis=1)).ravel()
    return (M + sp.diags(rowsum + 1.0)).tocsr()
