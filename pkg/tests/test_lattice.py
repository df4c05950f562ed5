import itertools

import numpy as np
import pytest

from fockgibbs.lattice import (
    LatticeSpec,
    build_laplacian,
    confining_hamiltonian,
    default_spec,
    laplacian_quadratic_form,
    multiplication_operator,
    single_particle_hamiltonian,
    stability_constant,
)


def test_laplacian_m3_matrix():
    spec = default_spec(3, h=1.0)
    lap = build_laplacian(spec)
    expected = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]])
    np.testing.assert_allclose(lap.matrix.real, expected, atol=1e-15)
    assert lap.kind == "laplacian"


def test_laplacian_m2_eigenvalues():
    # char poly (2-x)^2 - 1 -> {1, 3}
    spec = default_spec(2, h=1.0)
    vals = np.linalg.eigvalsh(build_laplacian(spec).matrix)
    np.testing.assert_allclose(vals, [1.0, 3.0], atol=1e-12)


@pytest.mark.parametrize("m,h", [(2, 1.0), (5, 0.3), (9, 2.0)])
def test_laplacian_strictly_positive(m, h):
    spec = default_spec(m, h=h)
    vals = np.linalg.eigvalsh(build_laplacian(spec).matrix)
    assert vals[0] > 0


def test_summation_by_parts_identity(rng):
    spec = default_spec(6, h=0.7)
    lap = build_laplacian(spec).matrix
    for _ in range(10):
        psi = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        direct = float((psi.conj() @ lap @ psi).real)
        assert abs(direct - laplacian_quadratic_form(spec, psi)) < 1e-12 * (1 + abs(direct))


def test_spec_rejects_bad_grid():
    with pytest.raises(ValueError):
        default_spec(1)
    with pytest.raises(ValueError):
        default_spec(4, h=0.0)
    with pytest.raises(ValueError):
        default_spec(4, h=-1.0)


def test_spec_rejects_bad_confinement():
    base = default_spec(5)
    # increasing toward the center instead of the boundary
    bad_vc = np.array([0.0, 1.0, 2.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        LatticeSpec(m=5, h=1.0, v_plus=base.v_plus, v_minus=base.v_minus,
                    v_c=bad_vc, w=base.w, r0=1.0)
    # minimum on the boundary
    bad_vc = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        LatticeSpec(m=5, h=1.0, v_plus=base.v_plus, v_minus=base.v_minus,
                    v_c=bad_vc, w=base.w, r0=1.0)


def test_spec_rejects_bad_scalars():
    base = default_spec(4)
    with pytest.raises(ValueError):
        default_spec(4, gamma=1.5)
    with pytest.raises(ValueError):
        LatticeSpec(m=4, h=1.0, v_plus=-base.v_c, v_minus=base.v_minus,
                    v_c=base.v_c, w=base.w, r0=1.0)
    with pytest.raises(ValueError):
        LatticeSpec(m=4, h=1.0, v_plus=base.v_plus, v_minus=base.v_minus,
                    v_c=base.v_c, w=base.w, r0=-0.5)


def test_two_site_grid_allowed():
    # no interior site exists, so only the valley shape is required
    spec = default_spec(2)
    assert spec.m == 2


def test_stability_constant_nonnegative_pair_law():
    spec = default_spec(5, w0=0.4)
    assert stability_constant(spec, 5, "fermionic") == 0.0
    assert stability_constant(spec, 5, "bosonic") == 0.0


def test_stability_constant_constant_attraction_bosonic():
    # w == -c: the worst multiset puts all n_max particles anywhere,
    # giving -c n(n-1)/2, so C0 = c (n_max - 1)/2
    c = 0.7
    base = default_spec(3)
    spec = LatticeSpec(m=3, h=1.0, v_plus=base.v_plus, v_minus=base.v_minus,
                       v_c=base.v_c, w=-c * np.ones(3), r0=10.0)
    for n_max in (2, 3, 5):
        got = stability_constant(spec, n_max, "bosonic")
        assert abs(got - c * (n_max - 1) / 2) < 1e-12


def test_stability_constant_fermionic_brute_force():
    # w(d) = -1/(1+d) on 4 sites, n_max = 3; worst case is {0,1,2} or {1,2,3}
    base = default_spec(4)
    w = np.array([-1.0 / (1 + d) for d in range(4)])
    spec = LatticeSpec(m=4, h=1.0, v_plus=base.v_plus, v_minus=base.v_minus,
                       v_c=base.v_c, w=w, r0=10.0)
    got = stability_constant(spec, 3, "fermionic")
    # independent enumeration
    worst = 0.0
    for n in (2, 3):
        for sites in itertools.combinations(range(4), n):
            total = sum(w[abs(a - b)] for a, b in itertools.combinations(sites, 2))
            worst = max(worst, -total / n)
    assert abs(got - worst) < 1e-15
    assert abs(got - 4.0 / 9.0) < 1e-12


def test_operator_kind_checks():
    with pytest.raises(ValueError):
        multiplication_operator(np.ones(3)).__class__(
            matrix=np.array([[1.0, 0.5], [0.5, 1.0]]), kind="multiplication"
        )
    op = multiplication_operator([1.0, 2.0, 3.0])
    assert op.kind == "multiplication"
    assert op.m == 3


def test_single_particle_and_confining():
    spec = default_spec(4, kappa=0.3, r0=1.2, tilt=0.2)
    h1 = single_particle_hamiltonian(spec).matrix
    hc = confining_hamiltonian(spec).matrix
    lap = build_laplacian(spec).matrix
    np.testing.assert_allclose(h1, lap + np.diag(spec.potential + spec.r0), atol=1e-14)
    np.testing.assert_allclose(hc, lap + np.diag(spec.v_c), atol=1e-14)
    # tilt splits into nonnegative parts
    assert np.all(spec.v_plus >= 0) and np.all(spec.v_minus >= 0)
    np.testing.assert_allclose(spec.v_plus - spec.v_minus, 0.2 * (spec.x - spec.x.mean()), atol=1e-14)
