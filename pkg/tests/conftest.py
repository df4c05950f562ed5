import numpy as np
import pytest

from fockgibbs import enumerate_basis, gibbs_state, number_operator, second_quantize_onebody
from fockgibbs.moments import one_particle_dm, two_particle_dm


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the numba kernels once so timed checks measure the algorithms
    basis = enumerate_basis("fermionic", 2)
    ham = second_quantize_onebody(np.eye(2), basis)
    rho, _ = gibbs_state(ham, number_operator(basis), 0.5, 1.0)
    one_particle_dm(rho)
    two_particle_dm(rho)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
