"""Truncated occupation-number bases and second quantization.

The basis is sorted by total particle number; within a sector the states
follow itertools order of the occupied-site tuples (combinations for
fermions, combinations with replacement for bosons). For fermions, basis
phases are fixed by applying creation operators in increasing site order;
all matrix-element signs below follow from that single convention.

All operators offered here conserve total particle number, so their
matrices are exactly block diagonal over the sectors of the truncation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh as generalized_eigh

from . import _kernels
from .errors import DimensionCapError, StabilityError
from .lattice import (
    LatticeSpec,
    OneBodyOperator,
    confining_hamiltonian,
    single_particle_hamiltonian,
    stability_constant,
)

__all__ = [
    "FockBasis",
    "FockOperator",
    "enumerate_basis",
    "number_operator",
    "second_quantize_onebody",
    "second_quantize_twobody",
    "build_hamiltonian",
    "confining_fock_operator",
    "largest_stable_gamma",
    "DEFAULT_DIMENSION_CAP",
]

DEFAULT_DIMENSION_CAP = 20000
_HERM_TOL = 1e-10


def _sector_dimension(statistics, m, n):
    if statistics == "fermionic":
        return math.comb(m, n)
    return math.comb(m + n - 1, n)


class FockBasis:
    """Enumerated occupation basis with per-sector bookkeeping."""

    def __init__(self, statistics, m, n_max, occupations, sector_offsets):
        self.statistics = statistics
        self.m = m
        self.n_max = n_max
        self.occupations = occupations
        self.sector_offsets = sector_offsets
        self.totals = occupations.sum(axis=1)
        radix = 2 if statistics == "fermionic" else max(2, n_max + 1)
        self._pows = radix ** np.arange(m, dtype=np.int64)
        self._keys = occupations @ self._pows
        self._order = np.argsort(self._keys).astype(np.int64)
        self._sorted_keys = self._keys[self._order]
        self._pair_cache = None

    @property
    def dimension(self) -> int:
        return self.occupations.shape[0]

    def __len__(self):
        return self.dimension

    def __repr__(self):
        return f"FockBasis({self.statistics}, m={self.m}, n_max={self.n_max}, dim={self.dimension})"

    @property
    def fermionic(self) -> bool:
        return self.statistics == "fermionic"

    def sector_slice(self, n) -> slice:
        if not (0 <= n <= self.n_max):
            raise ValueError(f"sector {n} outside truncation 0..{self.n_max}")
        return slice(int(self.sector_offsets[n]), int(self.sector_offsets[n + 1]))

    def sectors(self):
        """Yield (n, slice) for every particle-number block."""
        for n in range(self.n_max + 1):
            yield n, self.sector_slice(n)

    def index_of(self, occupation) -> int:
        occ = np.asarray(occupation, dtype=np.int64)
        if occ.shape != (self.m,):
            raise ValueError(f"occupation vector must have length {self.m}")
        key = int(occ @ self._pows)
        pos = int(np.searchsorted(self._sorted_keys, key))
        if pos >= self.dimension or self._sorted_keys[pos] != key:
            raise KeyError(f"occupation {tuple(occupation)} not in basis")
        return int(self._order[pos])

    def _tables(self):
        return self.occupations, self._keys, self._pows, self._sorted_keys, self._order

    def pair_basis(self):
        """(pair list, pair_index matrix) for the 2-particle sector ordering."""
        if self._pair_cache is None:
            chooser = (
                itertools.combinations
                if self.fermionic
                else itertools.combinations_with_replacement
            )
            pairs = list(chooser(range(self.m), 2))
            index = -np.ones((self.m, self.m), dtype=np.int64)
            for pos, (i, j) in enumerate(pairs):
                index[i, j] = pos
                index[j, i] = pos
            self._pair_cache = (pairs, index)
        return self._pair_cache


def enumerate_basis(statistics, m, n_max=None, dim_cap=DEFAULT_DIMENSION_CAP) -> FockBasis:
    """Enumerate the truncated basis, sectors 0..n_max.

    Fermions default to n_max = m and anything larger is clamped to m.
    Raises DimensionCapError before materializing anything too large.
    """
    if statistics not in ("fermionic", "bosonic"):
        raise ValueError(f"statistics must be 'fermionic' or 'bosonic', got {statistics!r}")
    if m < 1:
        raise ValueError(f"mode count must be >= 1, got {m}")
    if statistics == "fermionic":
        n_max = m if n_max is None else min(int(n_max), m)
    elif n_max is None:
        raise ValueError("bosonic bases need an explicit n_max")
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")

    dims = [_sector_dimension(statistics, m, n) for n in range(n_max + 1)]
    total = sum(dims)
    if total > dim_cap:
        raise DimensionCapError(
            f"basis dimension {total} exceeds cap {dim_cap} "
            f"({statistics}, m={m}, n_max={n_max}); shrink the truncation"
        )
    radix = 2 if statistics == "fermionic" else max(2, n_max + 1)
    if m * math.log2(radix) > 62:
        raise DimensionCapError(
            f"occupation keys for m={m}, n_max={n_max} overflow 64-bit indexing"
        )

    occ = np.zeros((total, m), dtype=np.int64)
    offsets = np.zeros(n_max + 2, dtype=np.int64)
    row = 0
    chooser = (
        itertools.combinations if statistics == "fermionic" else itertools.combinations_with_replacement
    )
    for n in range(n_max + 1):
        offsets[n] = row
        for sites in chooser(range(m), n):
            for s in sites:
                occ[row, s] += 1
            row += 1
    offsets[n_max + 1] = row
    occ.flags.writeable = False
    return FockBasis(statistics, m, n_max, occ, offsets)


@dataclass
class FockOperator:
    """Dense Hermitian operator over a FockBasis."""

    basis: FockBasis
    matrix: np.ndarray
    block_diagonal: bool = False
    _validated: bool = field(default=False, repr=False)

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        dim = self.basis.dimension
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match basis dimension {dim}")
        if not self._validated:
            scale = 1.0 + float(np.max(np.abs(mat))) if mat.size else 1.0
            if np.max(np.abs(mat - mat.conj().T)) > _HERM_TOL * scale:
                raise ValueError("Fock operator must be Hermitian")
            if self.block_diagonal:
                for n, sl in self.basis.sectors():
                    before = mat[: sl.start, sl]
                    after = mat[sl.stop :, sl]
                    if before.size and np.max(np.abs(before)) > _HERM_TOL * scale:
                        raise ValueError("operator marked block diagonal has cross-sector elements")
                    if after.size and np.max(np.abs(after)) > _HERM_TOL * scale:
                        raise ValueError("operator marked block diagonal has cross-sector elements")
        mat.flags.writeable = False
        self.matrix = mat

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def sector_block(self, n) -> np.ndarray:
        sl = self.basis.sector_slice(n)
        return self.matrix[sl, sl]

    def __add__(self, other):
        if not isinstance(other, FockOperator):
            return NotImplemented
        if other.basis is not self.basis:
            raise ValueError("operators live on different bases")
        return FockOperator(
            self.basis,
            self.matrix + other.matrix,
            block_diagonal=self.block_diagonal and other.block_diagonal,
            _validated=True,
        )

    def __mul__(self, scalar):
        return FockOperator(
            self.basis, self.matrix * float(scalar), block_diagonal=self.block_diagonal, _validated=True
        )

    __rmul__ = __mul__


def number_operator(basis: FockBasis) -> FockOperator:
    """dGamma(Id): diagonal total occupation."""
    mat = np.diag(basis.totals.astype(np.complex128))
    return FockOperator(basis, mat, block_diagonal=True, _validated=True)


def _as_matrix(op, m):
    mat = op.matrix if isinstance(op, OneBodyOperator) else np.asarray(op, dtype=np.complex128)
    if mat.shape != (m, m):
        raise ValueError(f"one-body matrix must be {m}x{m}, got {mat.shape}")
    scale = 1.0 + float(np.max(np.abs(mat)))
    if np.max(np.abs(mat - mat.conj().T)) > _HERM_TOL * scale:
        raise ValueError("one-body matrix must be Hermitian")
    return np.ascontiguousarray(mat, dtype=np.complex128)


def second_quantize_onebody(op, basis: FockBasis) -> FockOperator:
    """Lift a one-body operator A to sum_ij A_ij adag_i a_j on the truncation.

    Restricted to the n-particle sector this equals the sum of A over the n
    particle slots; the n = 1 block is A itself.
    """
    amat = _as_matrix(op, basis.m)
    occ, keys, pows, sorted_keys, order = basis._tables()
    mat = _kernels.onebody_matrix(occ, keys, pows, sorted_keys, order, amat, basis.fermionic)
    return FockOperator(basis, mat, block_diagonal=True, _validated=True)


def second_quantize_twobody(w_table, basis: FockBasis) -> FockOperator:
    """Pair interaction sum_{pairs} w(x_a - x_b), diagonal in the occupation basis.

    Site pairs (i < j) contribute w(|i-j|h) n_i n_j; a doubly occupied bosonic
    site contributes w(0) n_i (n_i - 1)/2. Sectors 0 and 1 vanish identically.
    """
    w = np.asarray(w_table, dtype=np.float64).reshape(-1)
    if w.shape[0] < basis.m:
        raise ValueError(f"pair table must cover distances 0..{basis.m - 1}")
    idx = np.arange(basis.m)
    pairw = w[np.abs(idx[:, None] - idx[None, :])]
    diag = _kernels.pair_diagonal(basis.occupations, pairw)
    return FockOperator(basis, np.diag(diag.astype(np.complex128)), block_diagonal=True, _validated=True)


def build_hamiltonian(spec: LatticeSpec, basis: FockBasis) -> FockOperator:
    """Full many-body Hamiltonian dGamma(h0 + V + r0) + pair interaction.

    Validates classical stability first: the enumerated pair constant C0
    (over configurations up to the basis cutoff) must satisfy r0 > C0. The
    vacuum row and column vanish, so the lowest eigenvalue is exactly 0.
    """
    if spec.m != basis.m:
        raise ValueError(f"lattice has {spec.m} sites but basis has {basis.m} modes")
    c0 = stability_constant(spec, basis.n_max, basis.statistics)
    if spec.r0 <= c0:
        raise StabilityError(
            f"r0 = {spec.r0} must exceed the pair stability constant C0 = {c0}"
        )
    h1 = single_particle_hamiltonian(spec)
    out = second_quantize_onebody(h1, basis) + second_quantize_twobody(spec.w, basis)
    return out


def confining_fock_operator(spec: LatticeSpec, basis: FockBasis) -> FockOperator:
    """dGamma(h0 + v_c), the confining comparison operator on the truncation."""
    return second_quantize_onebody(confining_hamiltonian(spec), basis)


def largest_stable_gamma(spec: LatticeSpec, basis: FockBasis) -> float:
    """Largest gamma with H_n >= gamma (H_n^c + n) on every enumerated sector.

    Solved as a generalized eigenvalue problem per sector; the certificate
    only covers n <= basis.n_max. spec.gamma is expected to sit below the
    returned value.
    """
    ham = build_hamiltonian(spec, basis)
    conf = confining_fock_operator(spec, basis)
    best = np.inf
    for n, sl in basis.sectors():
        if n == 0:
            continue
        hn = ham.matrix[sl, sl]
        bn = conf.matrix[sl, sl] + n * np.eye(sl.stop - sl.start)
        vals = generalized_eigh(hn, bn, eigvals_only=True)
        best = min(best, float(vals[0]))
    return best
