"""Reduced density matrices and local moment fields of a Fock-space state.

Field conventions (all linear in the state, which the convex solver relies
on): densities and energies are per unit length (divided by h) so that
h * sum(field) reproduces the corresponding trace exactly. The current u and
kinetic energy k live on edges (forward differences); the two Dirichlet
boundary terms are folded into the first and last edge of k, which makes

    h * sum(k) = Tr(h0 rho1)          (exact, not O(h))
    h * sum(e) = Tr(H rho)            (exact)

identities of the discretization. Edge fields are split half-half onto
their endpoint sites when a site-indexed total energy is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fock import FockBasis
from .gibbs import DensityMatrix
from .lattice import LatticeSpec

__all__ = [
    "ReducedDM1",
    "ReducedDM2",
    "MomentFields",
    "one_particle_dm",
    "two_particle_dm",
    "site_pair_density",
    "moment_fields",
]


@dataclass(frozen=True)
class ReducedDM1:
    """One-particle density matrix: rho1[i, j] = Tr(adag_j a_i rho).

    Positive semidefinite with Tr(rho1) = Tr(N rho); reproduces every
    one-body expectation through Tr_h(A rho1) = Tr(dGamma(A) rho).
    """

    matrix: np.ndarray
    basis: FockBasis

    @property
    def trace(self) -> float:
        return float(self.matrix.trace().real)


@dataclass(frozen=True)
class ReducedDM2:
    """Two-particle density matrix on the pair-sector basis.

    Rows/columns follow the basis ordering of the 2-particle sector. The
    trace counts pairs: Tr(rho2) = sum_n C(n,2) P_n expectation.
    """

    matrix: np.ndarray
    basis: FockBasis

    @property
    def trace(self) -> float:
        return float(self.matrix.trace().real)


@dataclass(frozen=True)
class MomentFields:
    """Site/edge-indexed moment fields (n, u, k, e_P, e_I, e).

    n, e_P, e_I, e are site arrays; u and k are edge arrays. e is the total
    energy density e = k_site + e_P + e_I with k split onto sites.
    """

    n: np.ndarray
    u: np.ndarray
    k: np.ndarray
    e_P: np.ndarray
    e_I: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        for name in ("n", "u", "k", "e_P", "e_I", "e"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        m = self.n.shape[0]
        if self.u.shape != (m - 1,) or self.k.shape != (m - 1,):
            raise ValueError("u and k must be edge arrays of length m - 1")
        if self.e_P.shape != (m,) or self.e_I.shape != (m,) or self.e.shape != (m,):
            raise ValueError("e_P, e_I, e must be site arrays of length m")

    @property
    def sites(self) -> int:
        return self.n.shape[0]

    @property
    def k_site(self) -> np.ndarray:
        """Edge kinetic density split half-half onto endpoint sites."""
        out = np.zeros(self.sites)
        out[:-1] += 0.5 * self.k
        out[1:] += 0.5 * self.k
        return out

    def constraint_vector(self) -> np.ndarray:
        """Concatenated (n, u, e), the fields the entropy minimizer pins."""
        return np.concatenate([self.n, self.u, self.e])

    def difference(self, other: "MomentFields") -> "MomentFields":
        return MomentFields(
            n=self.n - other.n,
            u=self.u - other.u,
            k=self.k - other.k,
            e_P=self.e_P - other.e_P,
            e_I=self.e_I - other.e_I,
            e=self.e - other.e,
        )


def one_particle_dm(rho: DensityMatrix) -> ReducedDM1:
    """Contract the state against adag_j a_i over the whole truncation."""
    basis = rho.basis
    occ, keys, pows, sorted_keys, order = basis._tables()
    mat = _kernels.rdm1(occ, keys, pows, sorted_keys, order, rho.matrix, basis.fermionic)
    return ReducedDM1(mat, basis)


def two_particle_dm(rho: DensityMatrix) -> ReducedDM2:
    """Contract the state against normalized pair transitions.

    States supported on sectors with fewer than two particles contribute
    nothing; a truncation without a 2-particle sector yields a zero matrix.
    """
    basis = rho.basis
    pairs, pair_index = basis.pair_basis()
    n_pairs = len(pairs)
    if basis.n_max < 2:
        return ReducedDM2(np.zeros((n_pairs, n_pairs), dtype=np.complex128), basis)
    occ, keys, pows, sorted_keys, order = basis._tables()
    mat = _kernels.rdm2(
        occ, keys, pows, sorted_keys, order, rho.matrix, pair_index, n_pairs, basis.fermionic
    )
    return ReducedDM2(mat, basis)


def site_pair_density(rho: DensityMatrix) -> np.ndarray:
    """Symmetric m x m pair weights M with sum_ij M_ij w(i,j) = Tr(W rho).

    M[i, j] = 0.5 <n_i n_j> for i != j and M[i, i] = 0.5 <n_i (n_i - 1)>;
    both are diagonal in the occupation basis, so only diag(rho) enters.
    """
    basis = rho.basis
    occ = basis.occupations.astype(np.float64)
    d = rho.matrix.diagonal().real
    raw = occ.T @ (occ * d[:, None])
    m = basis.m
    diag_first = occ.T @ d  # <n_i>
    out = 0.5 * raw
    out[np.arange(m), np.arange(m)] = 0.5 * (raw.diagonal() - diag_first)
    return out


def moment_fields(rho: DensityMatrix, spec: LatticeSpec) -> MomentFields:
    """Extract (n, u, k, e_P, e_I, e) from a state.

    n_i = rho1_ii / h; u on edge (i, i+1) = Im rho1[i+1, i] / h^2; k on the
    same edge collects |forward difference|^2 / h^3 with the two boundary
    terms folded into the outermost edges. e_P = V n, and the interaction
    density is the pair density contracted against w plus the r0 shift:
    e_I = (M w-row sums)/h + r0 n.
    """
    basis = rho.basis
    if basis.m != spec.m:
        raise ValueError(f"state has {basis.m} modes but lattice has {spec.m} sites")
    h = spec.h
    rho1 = one_particle_dm(rho).matrix
    diag = rho1.diagonal().real
    sub = rho1.diagonal(-1)  # rho1[i+1, i]

    n = diag / h
    u = sub.imag / h**2
    k = (diag[:-1] + diag[1:] - 2.0 * sub.real) / h**3
    k = k.copy()
    k[0] += diag[0] / h**3
    k[-1] += diag[-1] / h**3

    e_pot = spec.potential * n

    m = spec.m
    idx = np.arange(m)
    wmat = spec.w[np.abs(idx[:, None] - idx[None, :])]
    pair = site_pair_density(rho)
    e_int = (pair * wmat).sum(axis=1) / h + spec.r0 * n

    k_site = np.zeros(m)
    k_site[:-1] += 0.5 * k
    k_site[1:] += 0.5 * k
    total = k_site + e_pot + e_int
    return MomentFields(n=n, u=u, k=k, e_P=e_pot, e_I=e_int, e=total)
