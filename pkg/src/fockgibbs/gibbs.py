"""Spectral calculus on Fock operators: Gibbs states and thermodynamics.

Sign conventions used throughout the package:

* the entropy is S(rho) = Tr(rho log rho) = sum_i p_i log p_i <= 0, i.e. the
  negative of the usual physical entropy, and it is *minimized*;
* the grand-canonical weight is exp(-beta H - alpha N), so -alpha plays the
  role of beta times the chemical potential and alpha >= 0 is the standard
  domain (negative alpha is legal on a finite truncation but only behind an
  explicit opt-in, since none of its properties are asserted here).

For a Gibbs state the closed form S = -beta E - alpha N - log Z holds to
machine precision; several routines cross-check against it.

The partition function is always evaluated with a max-shift (exponents are
shifted by their minimum before exponentiation), so beta up to ~1e3 as used
by the root solvers cannot overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import FockBasis, FockOperator

__all__ = [
    "DensityMatrix",
    "GibbsSummary",
    "FockSpectrum",
    "fock_spectrum",
    "gibbs_state",
    "boltzmann_state",
    "entropy",
    "relative_entropy",
    "free_energy",
    "thermo_scan",
    "ThermoScan",
    "entropy_lower_bound_check",
    "pure_state",
    "random_state",
]

TRACE_TOL = 1e-10
EIG_TOL = 1e-10
KERNEL_TOL = 1e-14  # sigma eigenvalues below KERNEL_TOL*max are treated as kernel
KERNEL_WEIGHT_TOL = 1e-12


class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix over a FockBasis.

    Construction validates Hermiticity, trace = 1 (1e-10 relative) and an
    eigenvalue floor of -1e-10; eigenvalues are clamped into [0, 1] for all
    spectral functions. Instances are immutable.
    """

    def __init__(self, basis: FockBasis, matrix, validate=True, eigenvalues=None):
        mat = np.ascontiguousarray(matrix, dtype=np.complex128)
        dim = basis.dimension
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match basis dimension {dim}")
        self.basis = basis
        self._eigenvalues = None if eigenvalues is None else np.asarray(eigenvalues, dtype=float)
        if validate:
            scale = 1.0 + float(np.max(np.abs(mat)))
            if np.max(np.abs(mat - mat.conj().T)) > TRACE_TOL * scale:
                raise ValueError("density matrix must be Hermitian")
            tr = mat.trace().real
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"density matrix must have unit trace, got {tr}")
            vals = np.linalg.eigvalsh(mat) if self._eigenvalues is None else self._eigenvalues
            if vals.min() < -EIG_TOL or vals.max() > 1.0 + EIG_TOL:
                raise ValueError("density-matrix spectrum leaves [0, 1] beyond tolerance")
            self._eigenvalues = vals
        mat.flags.writeable = False
        self._matrix = mat

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def eigenvalues(self) -> np.ndarray:
        """Spectrum clamped into [0, 1]."""
        if self._eigenvalues is None:
            self._eigenvalues = np.linalg.eigvalsh(self._matrix)
        return np.clip(self._eigenvalues, 0.0, 1.0)

    def expectation(self, op) -> float:
        mat = op.matrix if isinstance(op, FockOperator) else np.asarray(op)
        return float(np.einsum("ij,ji->", self._matrix, mat).real)

    def mix(self, other: "DensityMatrix", weight: float) -> "DensityMatrix":
        """Convex combination weight*self + (1-weight)*other."""
        if not (0.0 <= weight <= 1.0):
            raise ValueError("mixing weight must lie in [0, 1]")
        return DensityMatrix(self.basis, weight * self._matrix + (1 - weight) * other._matrix)


@dataclass(frozen=True)
class GibbsSummary:
    """Scalar summary of a grand-canonical Gibbs state."""

    alpha: float
    beta: float
    logZ: float
    N: float
    E: float
    S: float


@dataclass(frozen=True)
class FockSpectrum:
    """Joint (energy, particle number) spectrum of a commuting pair (H, N)."""

    energies: np.ndarray
    numbers: np.ndarray

    def exponents(self, alpha, beta):
        return beta * self.energies + alpha * self.numbers

    def log_partition(self, alpha, beta) -> float:
        x = self.exponents(alpha, beta)
        xmin = x.min()
        return float(-xmin + np.log(np.exp(-(x - xmin)).sum()))

    def probabilities(self, alpha, beta) -> np.ndarray:
        x = self.exponents(alpha, beta)
        w = np.exp(-(x - x.min()))
        return w / w.sum()

    def stats(self, alpha, beta) -> GibbsSummary:
        p = self.probabilities(alpha, beta)
        ent = float(np.sum(p[p > 0] * np.log(p[p > 0])))
        return GibbsSummary(
            alpha=float(alpha),
            beta=float(beta),
            logZ=self.log_partition(alpha, beta),
            N=float(p @ self.numbers),
            E=float(p @ self.energies),
            S=ent,
        )


def _check_commuting_pair(H: FockOperator, Nop: FockOperator):
    if H.basis is not Nop.basis:
        raise ValueError("H and N must share a basis")
    expected = np.diag(H.basis.totals.astype(np.complex128))
    if np.max(np.abs(Nop.matrix - expected)) > TRACE_TOL * (1.0 + H.basis.n_max):
        raise ValueError("number operator does not match the basis occupation totals")
    if not H.block_diagonal:
        comm = H.matrix @ Nop.matrix - Nop.matrix @ H.matrix
        scale = (1.0 + np.max(np.abs(H.matrix))) * (1.0 + np.max(np.abs(Nop.matrix)))
        if np.max(np.abs(comm)) > TRACE_TOL * scale:
            raise ValueError("H must commute with the number operator")


def _sector_eigh(op: FockOperator):
    """Eigendecomposition per particle sector: [(n, slice, evals, evecs)]."""
    out = []
    for n, sl in op.basis.sectors():
        block = op.matrix[sl, sl]
        vals, vecs = np.linalg.eigh(block)
        out.append((n, sl, vals, vecs))
    return out


def fock_spectrum(H: FockOperator, Nop: FockOperator) -> FockSpectrum:
    """Eigenvalues of H labelled by particle number, sector by sector."""
    _check_commuting_pair(H, Nop)
    if not H.block_diagonal:
        raise ValueError("fock_spectrum needs a sector-block-diagonal Hamiltonian")
    energies = np.empty(H.dimension)
    numbers = np.empty(H.dimension)
    for n, sl in H.basis.sectors():
        energies[sl] = np.linalg.eigvalsh(H.matrix[sl, sl])
        numbers[sl] = n
    energies.flags.writeable = False
    numbers.flags.writeable = False
    return FockSpectrum(energies, numbers)


def boltzmann_state(K: FockOperator):
    """State exp(-K)/Tr exp(-K) plus log of the normalization.

    Returns (DensityMatrix, logZ, blocks) where blocks holds the per-sector
    (slice, eigenvectors, probabilities) used to assemble the state.
    """
    if not K.block_diagonal:
        raise ValueError("boltzmann_state needs a sector-block-diagonal operator")
    decomp = _sector_eigh(K)
    all_vals = np.concatenate([vals for (_, _, vals, _) in decomp])
    xmin = all_vals.min()
    weights = [np.exp(-(vals - xmin)) for (_, _, vals, _) in decomp]
    z = sum(w.sum() for w in weights)
    logz = float(-xmin + np.log(z))
    dim = K.dimension
    rho = np.zeros((dim, dim), dtype=np.complex128)
    blocks = []
    for (n, sl, vals, vecs), w in zip(decomp, weights):
        p = w / z
        rho[sl, sl] = (vecs * p) @ vecs.conj().T
        blocks.append((sl, vecs, p))
    probs = np.concatenate([p for (_, _, p) in blocks])
    state = DensityMatrix(K.basis, rho, validate=False, eigenvalues=np.sort(probs))
    return state, logz, blocks


def gibbs_state(H: FockOperator, Nop: FockOperator, alpha, beta, allow_negative_alpha=False):
    """Grand-canonical Gibbs state exp(-beta H - alpha N)/Z with its summary."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if alpha < 0 and not allow_negative_alpha:
        raise ValueError(
            "alpha < 0 is outside the standard domain; pass allow_negative_alpha=True to opt in"
        )
    _check_commuting_pair(H, Nop)
    if H.block_diagonal:
        exponent = FockOperator(
            H.basis,
            beta * H.matrix + alpha * Nop.matrix,
            block_diagonal=True,
            _validated=True,
        )
        state, _, _ = boltzmann_state(exponent)
        spectrum = fock_spectrum(H, Nop)
        summary = spectrum.stats(alpha, beta)
        return state, summary
    # commuting but not flagged block diagonal: fall back to a dense solve
    kmat = beta * H.matrix + alpha * Nop.matrix
    vals, vecs = np.linalg.eigh(kmat)
    w = np.exp(-(vals - vals.min()))
    z = w.sum()
    p = w / z
    rho = (vecs * p) @ vecs.conj().T
    state = DensityMatrix(H.basis, rho, validate=False, eigenvalues=np.sort(p))
    logz = float(-vals.min() + np.log(z))
    n_avg = state.expectation(Nop)
    e_avg = state.expectation(H)
    ent = float(np.sum(p[p > 0] * np.log(p[p > 0])))
    return state, GibbsSummary(float(alpha), float(beta), logz, n_avg, e_avg, ent)


def entropy(rho: DensityMatrix) -> float:
    """S(rho) = sum_i p_i log p_i with 0 log 0 = 0; lies in [-log D, 0]."""
    p = rho.eigenvalues()
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask])))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Tr(rho (log rho - log sigma)) >= 0, +inf on support mismatch.

    sigma eigenvalues below 1e-14 of its largest count as kernel; rho weight
    above 1e-12 on that kernel triggers +inf.
    """
    if rho.basis is not sigma.basis:
        raise ValueError("states must share a basis")
    svals, svecs = np.linalg.eigh(sigma.matrix)
    svals = np.clip(svals, 0.0, None)
    kernel = svals < KERNEL_TOL * max(svals.max(), np.finfo(float).tiny)
    weights = np.einsum("ij,jk,ki->i", svecs.conj().T, rho.matrix, svecs).real
    weights = np.clip(weights, 0.0, None)
    if weights[kernel].sum() > KERNEL_WEIGHT_TOL:
        return np.inf
    support = ~kernel
    cross = float(weights[support] @ np.log(svals[support]))
    return entropy(rho) - cross


def free_energy(rho: DensityMatrix, H: FockOperator, beta) -> float:
    """F_beta(rho) = S(rho)/beta + Tr(H rho)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return entropy(rho) / beta + rho.expectation(H)


@dataclass(frozen=True)
class ThermoScan:
    """Gibbs summaries on an (alpha, beta) product grid.

    fd_number/fd_energy hold centered finite differences of -d(logZ)/d(alpha)
    and -d(logZ)/d(beta) on interior grid points (NaN on the border); they are
    None when the corresponding grid has fewer than 3 points.
    """

    alphas: np.ndarray
    betas: np.ndarray
    logZ: np.ndarray
    N: np.ndarray
    E: np.ndarray
    S: np.ndarray
    fd_number: np.ndarray | None
    fd_energy: np.ndarray | None

    def summaries(self):
        for i, a in enumerate(self.alphas):
            for j, b in enumerate(self.betas):
                yield GibbsSummary(
                    float(a), float(b),
                    float(self.logZ[i, j]), float(self.N[i, j]),
                    float(self.E[i, j]), float(self.S[i, j]),
                )


def thermo_scan(H: FockOperator, Nop: FockOperator, alphas, betas) -> ThermoScan:
    """Evaluate logZ, N, E, S over the grid, plus derivative estimates."""
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if alphas.size == 0 or betas.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(betas <= 0):
        raise ValueError("all beta values must be positive")
    spectrum = fock_spectrum(H, Nop)
    shape = (alphas.size, betas.size)
    logz = np.empty(shape)
    nn = np.empty(shape)
    ee = np.empty(shape)
    ss = np.empty(shape)
    for i, a in enumerate(alphas):
        for j, b in enumerate(betas):
            g = spectrum.stats(a, b)
            logz[i, j], nn[i, j], ee[i, j], ss[i, j] = g.logZ, g.N, g.E, g.S
    fd_number = None
    fd_energy = None
    if alphas.size >= 3:
        fd_number = np.full(shape, np.nan)
        da = alphas[2:] - alphas[:-2]
        fd_number[1:-1, :] = -(logz[2:, :] - logz[:-2, :]) / da[:, None]
    if betas.size >= 3:
        fd_energy = np.full(shape, np.nan)
        db = betas[2:] - betas[:-2]
        fd_energy[:, 1:-1] = -(logz[:, 2:] - logz[:, :-2]) / db[None, :]
    return ThermoScan(alphas, betas, logz, nn, ee, ss, fd_number, fd_energy)


def entropy_lower_bound_check(rho: DensityMatrix, Hc: FockOperator, beta):
    """Evaluate S(rho) against -beta Tr(Hc rho) - log Tr exp(-beta Hc).

    Returns (lhs, rhs, ok) with ok = lhs >= rhs - 1e-9. Equality holds when
    rho is the Gibbs state of Hc at this beta.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    lhs = entropy(rho)
    energy = rho.expectation(Hc)
    if Hc.block_diagonal:
        vals = np.concatenate([np.linalg.eigvalsh(Hc.matrix[sl, sl]) for _, sl in Hc.basis.sectors()])
    else:
        vals = np.linalg.eigvalsh(Hc.matrix)
    x = beta * vals
    xmin = x.min()
    logzc = float(-xmin + np.log(np.exp(-(x - xmin)).sum()))
    rhs = -beta * energy - logzc
    return lhs, rhs, bool(lhs >= rhs - 1e-9)


def pure_state(basis: FockBasis, occupation) -> DensityMatrix:
    """Projector onto a single occupation-number basis state."""
    idx = basis.index_of(occupation)
    mat = np.zeros((basis.dimension, basis.dimension), dtype=np.complex128)
    mat[idx, idx] = 1.0
    vals = np.zeros(basis.dimension)
    vals[-1] = 1.0
    return DensityMatrix(basis, mat, validate=False, eigenvalues=vals)


def random_state(basis: FockBasis, rng: np.random.Generator) -> DensityMatrix:
    """Full-rank random state G G^dagger / Tr, complex Ginibre G."""
    dim = basis.dimension
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    mat = g @ g.conj().T
    mat /= mat.trace().real
    return DensityMatrix(basis, mat)
