import numpy as np
import pytest

from cancellation.seqgen import GOLDEN, gen_iid, gen_sqrt_rotation


@pytest.fixture(scope="session")
def sqrt_seq_1e6():
    # enough room for N = 10^6 windows plus 10^3 lags
    return gen_sqrt_rotation(GOLDEN, 10**6 + 1000)


@pytest.fixture(scope="session")
def iid_seq_1e6():
    return gen_iid("symmetric-two-point", seed=11, T=10**6 + 1000)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)
