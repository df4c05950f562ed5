import math

import numpy as np
import pytest

from fockgibbs.errors import DimensionCapError, StabilityError
from fockgibbs.fock import (
    FockOperator,
    build_hamiltonian,
    enumerate_basis,
    largest_stable_gamma,
    number_operator,
    second_quantize_onebody,
    second_quantize_twobody,
)
from fockgibbs.lattice import LatticeSpec, default_spec, single_particle_hamiltonian


def _random_hermitian(rng, m):
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return 0.5 * (g + g.conj().T)


def test_enumerate_fermionic_m2():
    basis = enumerate_basis("fermionic", 2)
    states = [tuple(row) for row in basis.occupations]
    assert states == [(0, 0), (1, 0), (0, 1), (1, 1)]
    assert basis.dimension == 4


def test_enumerate_bosonic_m2_nmax2():
    basis = enumerate_basis("bosonic", 2, 2)
    assert basis.dimension == 6
    assert [tuple(r) for r in basis.occupations[basis.sector_slice(2)]] == [(2, 0), (1, 1), (0, 2)]


def test_enumerate_fermionic_m8():
    basis = enumerate_basis("fermionic", 8)
    assert basis.dimension == 256


@pytest.mark.parametrize("statistics,m,n_max", [("fermionic", 5, 5), ("bosonic", 4, 3)])
def test_sector_dimensions(statistics, m, n_max):
    basis = enumerate_basis(statistics, m, n_max)
    for n, sl in basis.sectors():
        expected = math.comb(m, n) if statistics == "fermionic" else math.comb(m + n - 1, n)
        assert sl.stop - sl.start == expected
        assert np.all(basis.totals[sl] == n)
    # vacuum sector is the single empty state
    assert basis.sector_slice(0) == slice(0, 1)
    assert np.all(basis.occupations[0] == 0)


def test_dimension_cap():
    with pytest.raises(DimensionCapError):
        enumerate_basis("fermionic", 16, dim_cap=1000)
    with pytest.raises(DimensionCapError):
        enumerate_basis("bosonic", 10, 10, dim_cap=5000)


def test_fermionic_nmax_clamped_and_truncated():
    assert enumerate_basis("fermionic", 3, 10).n_max == 3
    truncated = enumerate_basis("fermionic", 4, 2)
    assert truncated.n_max == 2
    assert truncated.dimension == 1 + 4 + 6


def test_bosonic_needs_nmax():
    with pytest.raises(ValueError):
        enumerate_basis("bosonic", 3)


def test_index_of_round_trip():
    basis = enumerate_basis("bosonic", 3, 3)
    for idx, occ in enumerate(basis.occupations):
        assert basis.index_of(occ) == idx
    with pytest.raises(KeyError):
        basis.index_of((3, 3, 3))


def test_number_operator_is_total_occupation():
    for statistics, m, n_max in (("fermionic", 3, None), ("bosonic", 2, 3)):
        basis = enumerate_basis(statistics, m, n_max)
        nop = number_operator(basis)
        np.testing.assert_allclose(nop.matrix, np.diag(basis.totals.astype(complex)), atol=1e-15)
        lifted = second_quantize_onebody(np.eye(basis.m), basis)
        np.testing.assert_allclose(lifted.matrix, nop.matrix, atol=1e-13)


@pytest.mark.parametrize("statistics,n_max", [("fermionic", None), ("bosonic", 3)])
def test_sector_one_block_equals_matrix(statistics, n_max, rng):
    basis = enumerate_basis(statistics, 4, n_max)
    amat = _random_hermitian(rng, 4)
    lifted = second_quantize_onebody(amat, basis)
    np.testing.assert_allclose(lifted.sector_block(1), amat, atol=1e-13)


def test_fermionic_sign_convention():
    basis = enumerate_basis("fermionic", 2)
    amat = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    lifted = second_quantize_onebody(amat, basis)
    assert lifted.matrix[basis.index_of((1, 0)), basis.index_of((0, 1))] == pytest.approx(1.0)


def test_second_quantization_linearity(rng):
    basis = enumerate_basis("bosonic", 3, 3)
    a = _random_hermitian(rng, 3)
    b = _random_hermitian(rng, 3)
    lhs = second_quantize_onebody(a + 2.5 * b, basis).matrix
    rhs = second_quantize_onebody(a, basis).matrix + 2.5 * second_quantize_onebody(b, basis).matrix
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("statistics,n_max", [("fermionic", None), ("bosonic", 4)])
def test_sector_norm_bound(statistics, n_max, rng):
    # ||dGamma(A) restricted to sector n|| <= n ||A||
    basis = enumerate_basis(statistics, 3, n_max)
    amat = _random_hermitian(rng, 3)
    norm_a = np.linalg.norm(amat, 2)
    lifted = second_quantize_onebody(amat, basis)
    for n, _ in basis.sectors():
        if n == 0:
            continue
        block_norm = np.linalg.norm(lifted.sector_block(n), 2)
        assert block_norm <= n * norm_a + 1e-10


def test_diagonal_onebody_matches_occupation_sum(rng):
    basis = enumerate_basis("fermionic", 5)
    diag = rng.standard_normal(5)
    lifted = second_quantize_onebody(np.diag(diag), basis)
    expected = basis.occupations @ diag
    np.testing.assert_allclose(np.diag(lifted.matrix).real, expected, atol=1e-13)
    assert np.max(np.abs(lifted.matrix - np.diag(np.diag(lifted.matrix)))) < 1e-13


def test_twobody_single_pair_eigenvalue():
    spec = default_spec(4, w0=0.4, h=0.5)
    basis = enumerate_basis("fermionic", 4)
    w_op = second_quantize_twobody(spec.w, basis)
    idx = basis.index_of((1, 1, 0, 0))
    assert w_op.matrix[idx, idx].real == pytest.approx(spec.w[1])
    # distance-2 pair
    idx = basis.index_of((1, 0, 1, 0))
    assert w_op.matrix[idx, idx].real == pytest.approx(spec.w[2])


def test_twobody_zero_table():
    basis = enumerate_basis("bosonic", 3, 3)
    w_op = second_quantize_twobody(np.zeros(3), basis)
    assert np.max(np.abs(w_op.matrix)) == 0.0


def test_twobody_triple_occupancy_onsite():
    c = 0.9
    basis = enumerate_basis("bosonic", 2, 3)
    w_op = second_quantize_twobody([c, 0.0], basis)
    idx = basis.index_of((3, 0))
    # three on-site pairs
    assert w_op.matrix[idx, idx].real == pytest.approx(3 * c)


def test_hamiltonian_vacuum_and_sector_one():
    spec = default_spec(3, w0=0.4)
    basis = enumerate_basis("fermionic", 3)
    ham = build_hamiltonian(spec, basis)
    assert np.max(np.abs(ham.matrix[0, :])) == 0.0
    assert np.max(np.abs(ham.matrix[:, 0])) == 0.0
    h1 = single_particle_hamiltonian(spec).matrix
    np.testing.assert_allclose(ham.sector_block(1), h1, atol=1e-13)


def test_hamiltonian_two_mode_spectrum():
    # m=2: spectrum is {0} + spec(H1) + {tr(H1) + w(h)}
    spec = default_spec(2, w0=0.4, h=0.8)
    basis = enumerate_basis("fermionic", 2)
    ham = build_hamiltonian(spec, basis)
    h1 = single_particle_hamiltonian(spec).matrix
    expected = np.sort(np.concatenate([[0.0], np.linalg.eigvalsh(h1),
                                       [np.trace(h1).real + spec.w[1]]]))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(ham.matrix)), expected, atol=1e-12)


def test_hamiltonian_commutes_with_number():
    spec = default_spec(3, w0=0.4)
    for statistics, n_max in (("fermionic", None), ("bosonic", 3)):
        basis = enumerate_basis(statistics, 3, n_max)
        ham = build_hamiltonian(spec, basis)
        nop = number_operator(basis)
        comm = ham.matrix @ nop.matrix - nop.matrix @ ham.matrix
        assert np.max(np.abs(comm)) == 0.0


def test_stability_gate_rejects_small_r0():
    base = default_spec(3)
    spec = LatticeSpec(m=3, h=1.0, v_plus=base.v_plus, v_minus=base.v_minus,
                       v_c=base.v_c, w=-1.0 * np.ones(3), r0=0.3)
    basis = enumerate_basis("bosonic", 3, 4)
    with pytest.raises(StabilityError):
        build_hamiltonian(spec, basis)


def test_largest_stable_gamma_dominates_recorded():
    spec = default_spec(3, w0=0.4)
    basis = enumerate_basis("fermionic", 3)
    gamma_max = largest_stable_gamma(spec, basis)
    assert gamma_max >= spec.gamma


def test_block_diagonal_validation():
    basis = enumerate_basis("fermionic", 2)
    mat = np.zeros((4, 4), dtype=complex)
    mat[0, 1] = mat[1, 0] = 1.0  # couples sectors 0 and 1
    with pytest.raises(ValueError):
        FockOperator(basis, mat, block_diagonal=True)
    FockOperator(basis, mat, block_diagonal=False)  # fine as a generic operator
    with pytest.raises(ValueError):
        FockOperator(basis, np.triu(np.ones((4, 4))), block_diagonal=False)
