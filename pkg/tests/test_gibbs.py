import numpy as np
import pytest

from fockgibbs.fock import (
    FockOperator,
    build_hamiltonian,
    confining_fock_operator,
    enumerate_basis,
    number_operator,
    second_quantize_onebody,
)
from fockgibbs.gibbs import (
    DensityMatrix,
    boltzmann_state,
    entropy,
    entropy_lower_bound_check,
    fock_spectrum,
    gibbs_state,
    pure_state,
    random_state,
    relative_entropy,
    thermo_scan,
)
from fockgibbs.lattice import default_spec, single_particle_hamiltonian


@pytest.fixture
def single_mode():
    basis = enumerate_basis("fermionic", 1)
    ham = second_quantize_onebody(np.array([[1.0]]), basis)
    return basis, ham, number_operator(basis)


def test_single_mode_fermi_dirac(single_mode):
    basis, ham, nop = single_mode
    beta = 0.9
    _, summary = gibbs_state(ham, nop, 0.0, beta)
    assert summary.logZ == pytest.approx(np.log(1 + np.exp(-beta)), rel=1e-12)
    assert summary.N == pytest.approx(1.0 / (1 + np.exp(beta)), rel=1e-12)


def test_single_mode_quarter_filling(single_mode):
    # E(beta) = 1/(1 + e^beta) equals 1/4 exactly at beta = ln 3
    _, ham, nop = single_mode
    _, summary = gibbs_state(ham, nop, 0.0, np.log(3.0))
    assert summary.E == pytest.approx(0.25, rel=1e-12)


def test_large_alpha_gives_vacuum():
    spec = default_spec(3, w0=0.4)
    basis = enumerate_basis("fermionic", 3)
    ham = build_hamiltonian(spec, basis)
    rho, summary = gibbs_state(ham, number_operator(basis), 1e3, 1.0)
    assert abs(summary.N) < 1e-6
    assert abs(summary.S) < 1e-6
    assert rho.matrix[0, 0].real == pytest.approx(1.0, abs=1e-6)


def test_gibbs_entropy_identity():
    spec = default_spec(4, w0=0.4)
    basis = enumerate_basis("fermionic", 4)
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    for alpha, beta in [(0.0, 0.5), (0.7, 1.3), (2.0, 3.0)]:
        rho, s = gibbs_state(ham, nop, alpha, beta)
        closed = -s.beta * s.E - s.alpha * s.N - s.logZ
        assert s.S == pytest.approx(closed, rel=1e-8)
        assert entropy(rho) == pytest.approx(s.S, rel=1e-8, abs=1e-10)


def test_entropy_extremes():
    basis = enumerate_basis("fermionic", 3)
    assert entropy(pure_state(basis, (1, 0, 1))) == 0.0
    dim = basis.dimension
    maximally_mixed = DensityMatrix(basis, np.eye(dim, dtype=complex) / dim)
    assert entropy(maximally_mixed) == pytest.approx(-np.log(dim), rel=1e-12)


def test_entropy_range_random(rng):
    basis = enumerate_basis("bosonic", 2, 3)
    for _ in range(20):
        s = entropy(random_state(basis, rng))
        assert -np.log(basis.dimension) - 1e-12 <= s <= 0.0


def test_relative_entropy_self_and_orthogonal():
    basis = enumerate_basis("fermionic", 2)
    rho = pure_state(basis, (1, 0))
    sigma = pure_state(basis, (0, 1))
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert relative_entropy(rho, sigma) == np.inf


def test_relative_entropy_klein(rng):
    spec = default_spec(3, w0=0.4)
    basis = enumerate_basis("fermionic", 3)
    ham = build_hamiltonian(spec, basis)
    sigma, _ = gibbs_state(ham, number_operator(basis), 0.5, 1.0)
    for _ in range(25):
        rho = random_state(basis, rng)
        val = relative_entropy(rho, sigma)
        assert val >= -1e-9
        assert val > 1e-6  # random states are almost surely distinct from sigma
    assert relative_entropy(sigma, sigma) == pytest.approx(0.0, abs=1e-10)


def test_relative_entropy_support_mismatch(rng):
    basis = enumerate_basis("fermionic", 2)
    # sigma supported on the vacuum only, rho with full support
    sigma = pure_state(basis, (0, 0))
    rho = random_state(basis, rng)
    assert relative_entropy(rho, sigma) == np.inf


def test_thermo_scan_monotonicity_and_fd():
    spec = default_spec(4, w0=0.0)
    basis = enumerate_basis("fermionic", 4)
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    alphas = np.linspace(0.1, 1.5, 7)
    betas = np.linspace(0.5, 2.0, 7)
    scan = thermo_scan(ham, nop, alphas, betas)
    assert np.all(np.diff(scan.N, axis=0) < 0)
    assert np.all(np.diff(scan.E, axis=1) < 0)
    # centered grid differences approximate the closed-form free-fermion N
    # (coarse grid: accuracy is O(step^2); the tight check uses step 1e-3)
    eps = np.linalg.eigvalsh(single_particle_hamiltonian(spec).matrix)
    for i in range(1, 6):
        for j in range(7):
            n_ff = float(np.sum(1.0 / (np.exp(betas[j] * eps + alphas[i]) + 1.0)))
            assert scan.N[i, j] == pytest.approx(n_ff, rel=1e-12)
            assert scan.fd_number[i, j] == pytest.approx(n_ff, rel=5e-2)


def test_thermo_scan_small_grid_omits_fd():
    spec = default_spec(3, w0=0.4)
    basis = enumerate_basis("fermionic", 3)
    ham = build_hamiltonian(spec, basis)
    scan = thermo_scan(ham, number_operator(basis), [0.5, 1.0], [0.5, 1.0, 1.5])
    assert scan.fd_number is None
    assert scan.fd_energy is not None


def test_free_fermion_factorization():
    spec = default_spec(5, w0=0.0)
    basis = enumerate_basis("fermionic", 5)
    ham = build_hamiltonian(spec, basis)
    spectrum = fock_spectrum(ham, number_operator(basis))
    eps = np.linalg.eigvalsh(single_particle_hamiltonian(spec).matrix)
    for alpha, beta in [(0.0, 0.7), (1.1, 1.9)]:
        logz = spectrum.log_partition(alpha, beta)
        logz_ff = float(np.sum(np.log1p(np.exp(-beta * eps - alpha))))
        assert logz == pytest.approx(logz_ff, rel=1e-10)


def test_entropy_lower_bound_on_random_states(rng):
    spec = default_spec(4, w0=0.4)
    basis = enumerate_basis("fermionic", 4)
    conf = confining_fock_operator(spec, basis)
    for beta in (0.5, 1.0, 2.0):
        for _ in range(30):
            lhs, rhs, ok = entropy_lower_bound_check(random_state(basis, rng), conf, beta)
            assert ok
            assert lhs >= rhs - 1e-9


def test_entropy_lower_bound_equality_and_vacuum():
    spec = default_spec(4, w0=0.4)
    basis = enumerate_basis("fermionic", 4)
    conf = confining_fock_operator(spec, basis)
    beta = 1.3
    rho_c, _, _ = boltzmann_state(
        FockOperator(basis, beta * conf.matrix, block_diagonal=True, _validated=True)
    )
    lhs, rhs, ok = entropy_lower_bound_check(rho_c, conf, beta)
    assert ok
    assert lhs == pytest.approx(rhs, abs=1e-8)
    vac = pure_state(basis, (0, 0, 0, 0))
    lhs, rhs, ok = entropy_lower_bound_check(vac, conf, beta)
    assert ok
    assert lhs == 0.0
    assert rhs <= 0.0  # Z_c >= 1 so the bound is nonpositive at the vacuum


def test_gibbs_minimizes_entropy_at_fixed_moments(rng):
    # perturbations preserving Tr(rho N) and Tr(rho H) cannot lower S
    spec = default_spec(3, w0=0.4)
    basis = enumerate_basis("fermionic", 3)
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    rho_g, _ = gibbs_state(ham, nop, 0.6, 1.1)
    s_g = entropy(rho_g)
    dim = basis.dimension
    # orthonormalize {Id, N, H} in the Hilbert-Schmidt inner product
    basis_ops = []
    for op in (np.eye(dim, dtype=complex), nop.matrix.copy(), ham.matrix.copy()):
        for prev in basis_ops:
            op = op - np.vdot(prev, op) * prev
        basis_ops.append(op / np.sqrt(np.vdot(op, op).real))
    for _ in range(10):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        delta = 0.5 * (g + g.conj().T)
        for op in basis_ops:  # project out trace, number, energy components
            delta -= np.vdot(op, delta) * op
        delta = 0.5 * (delta + delta.conj().T)
        lam_min = float(np.linalg.eigvalsh(rho_g.matrix).min())
        t = 0.5 * lam_min / max(np.linalg.norm(delta, 2), 1e-300)
        rho_p = DensityMatrix(basis, rho_g.matrix + t * delta)
        assert rho_p.expectation(nop) == pytest.approx(rho_g.expectation(nop), abs=1e-10)
        assert rho_p.expectation(ham) == pytest.approx(rho_g.expectation(ham), abs=1e-10)
        assert entropy(rho_p) >= s_g - 1e-10


def test_density_matrix_validation():
    basis = enumerate_basis("fermionic", 2)
    dim = basis.dimension
    with pytest.raises(ValueError):
        DensityMatrix(basis, np.eye(dim) * 0.5)  # trace 2
    bad = np.zeros((dim, dim), dtype=complex)
    bad[0, 1] = 1.0
    bad[0, 0] = 1.0
    with pytest.raises(ValueError):
        DensityMatrix(basis, bad)  # not Hermitian
    neg = np.diag([1.2, -0.2, 0.0, 0.0]).astype(complex)
    with pytest.raises(ValueError):
        DensityMatrix(basis, neg)  # negative eigenvalue


def test_gibbs_state_input_validation():
    spec = default_spec(3, w0=0.4)
    basis = enumerate_basis("fermionic", 3)
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    with pytest.raises(ValueError):
        gibbs_state(ham, nop, 0.0, 0.0)
    with pytest.raises(ValueError):
        gibbs_state(ham, nop, -0.5, 1.0)
    rho, summary = gibbs_state(ham, nop, -0.5, 1.0, allow_negative_alpha=True)
    assert summary.S == pytest.approx(-summary.beta * summary.E - summary.alpha * summary.N - summary.logZ,
                                      rel=1e-8)
    # an operator that does not commute with N is rejected
    mat = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    mat[0, 1] = mat[1, 0] = 1.0
    bad = FockOperator(basis, mat, block_diagonal=False)
    with pytest.raises(ValueError):
        gibbs_state(bad, nop, 0.0, 1.0)


def test_nonblock_commuting_path():
    # a commuting operator not flagged block diagonal takes the dense route
    spec = default_spec(3, w0=0.4)
    basis = enumerate_basis("fermionic", 3)
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    generic = FockOperator(basis, ham.matrix.copy(), block_diagonal=False)
    rho_a, sum_a = gibbs_state(generic, nop, 0.4, 1.2)
    rho_b, sum_b = gibbs_state(ham, nop, 0.4, 1.2)
    np.testing.assert_allclose(rho_a.matrix, rho_b.matrix, atol=1e-12)
    assert sum_a.logZ == pytest.approx(sum_b.logZ, rel=1e-12)
