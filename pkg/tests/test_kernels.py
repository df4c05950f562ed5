"""The compiled kernels and their interpreted fallbacks must agree exactly."""

import numpy as np
import pytest

from fockgibbs import _kernels
from fockgibbs.fock import enumerate_basis


def _random_hermitian(rng, m):
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return np.ascontiguousarray(0.5 * (g + g.conj().T))


def _random_rho(rng, dim):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    mat = g @ g.conj().T
    return np.ascontiguousarray(mat / mat.trace().real)


def test_backend_name():
    assert _kernels.backend() in ("numba", "python")


@pytest.mark.parametrize("statistics,n_max", [("fermionic", None), ("bosonic", 3)])
def test_kernel_paths_agree(statistics, n_max, rng):
    basis = enumerate_basis(statistics, 4, n_max)
    occ, keys, pows, sorted_keys, order = basis._tables()
    amat = _random_hermitian(rng, 4)
    rho = _random_rho(rng, basis.dimension)
    fermionic = basis.fermionic

    fast = _kernels.onebody_matrix(occ, keys, pows, sorted_keys, order, amat, fermionic)
    slow = _kernels.onebody_matrix_py(occ, keys, pows, sorted_keys, order, amat, fermionic)
    np.testing.assert_array_equal(fast, slow)

    pairw = np.abs(_random_hermitian(rng, 4).real)
    np.testing.assert_array_equal(
        _kernels.pair_diagonal(occ, pairw), _kernels.pair_diagonal_py(occ, pairw)
    )

    np.testing.assert_array_equal(
        _kernels.rdm1(occ, keys, pows, sorted_keys, order, rho, fermionic),
        _kernels.rdm1_py(occ, keys, pows, sorted_keys, order, rho, fermionic),
    )

    _, pair_index = basis.pair_basis()
    n_pairs = int(pair_index.max()) + 1
    np.testing.assert_array_equal(
        _kernels.rdm2(occ, keys, pows, sorted_keys, order, rho, pair_index, n_pairs, fermionic),
        _kernels.rdm2_py(occ, keys, pows, sorted_keys, order, rho, pair_index, n_pairs, fermionic),
    )
