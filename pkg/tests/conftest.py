import numpy as np
import pytest

from specweight import builtins as bi
from specweight.orthogonalization import gram_schmidt


def basis_for(name, degree, **kw):
    e = bi.weight_entry(name)
    return gram_schmidt(e.weight, e.domain, degree, **kw)


@pytest.fixture(scope="session")
def legendre10():
    return basis_for("legendre1d", 10)


@pytest.fixture(scope="session")
def indicator1d_11():
    return basis_for("indicator1d", 11)


@pytest.fixture(scope="session")
def triangle4():
    return basis_for("triangle", 4)


@pytest.fixture(scope="session")
def indicator2d_6():
    return basis_for("indicator2d", 6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
