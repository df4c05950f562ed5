"""Single-particle lattice: grid, potentials, pair table, stability data.

Everything lives on a 1D grid of m sites with spacing h and Dirichlet
boundaries, so the hopping operator is strictly positive definite and the
confining well keeps low-temperature states away from the grid edges. The
pair potential is tabulated by site-distance index d = |i - j| (physical
distance d*h), which makes it even by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LatticeSpec",
    "OneBodyOperator",
    "build_laplacian",
    "multiplication_operator",
    "single_particle_hamiltonian",
    "confining_hamiltonian",
    "stability_constant",
    "default_spec",
]

_HERM_TOL = 1e-10


def _frozen_array(values, n, name):
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LatticeSpec:
    """Discretized one-particle problem plus interaction data.

    v_plus/v_minus are the positive/negative parts of the external
    potential, v_c the confining well, w the pair table by distance index,
    r0 the stability shift (must exceed the enumerated pair constant C0),
    and gamma the coercivity fraction certified in fock.largest_stable_gamma
    (only up to the particle cutoff actually enumerated).
    """

    m: int
    h: float
    v_plus: np.ndarray
    v_minus: np.ndarray
    v_c: np.ndarray
    w: np.ndarray
    r0: float
    gamma: float = 0.5

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"site count m must be an integer >= 2, got {self.m}")
        if not (self.h > 0):
            raise ValueError(f"grid spacing h must be positive, got {self.h}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "h", float(self.h))
        for name in ("v_plus", "v_minus", "v_c", "w"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name), self.m, name))
        for name in ("v_plus", "v_minus", "v_c"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} must be nonnegative")
        if self.r0 < 0:
            raise ValueError(f"r0 must be nonnegative, got {self.r0}")
        if not (0 < self.gamma < 1):
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        self._check_confining()

    def _check_confining(self):
        # v_c must be valley-shaped: nonincreasing down to its minimum and
        # nondecreasing back out. For m >= 3 the minimum must be attained at
        # an interior site; a 2-site grid has no interior.
        vc = self.v_c
        i0 = int(np.argmin(vc))
        tol = 1e-12 * (1.0 + float(np.max(vc)))
        if np.any(np.diff(vc[: i0 + 1]) > tol) or np.any(np.diff(vc[i0:]) < -tol):
            raise ValueError("v_c must decrease toward its minimum and increase toward both boundaries")
        if self.m >= 3 and np.min(vc[1:-1]) > np.min(vc) + tol:
            raise ValueError("v_c must attain its minimum at an interior site")

    @property
    def x(self) -> np.ndarray:
        """Site coordinates i*h for i = 0..m-1."""
        return np.arange(self.m) * self.h

    @property
    def potential(self) -> np.ndarray:
        """Total site potential V = v_plus - v_minus + v_c."""
        return self.v_plus - self.v_minus + self.v_c


@dataclass(frozen=True)
class OneBodyOperator:
    """Hermitian m x m operator on the single-particle space.

    kind is one of 'laplacian', 'multiplication', 'gradient', 'general';
    the first two carry structural checks (tridiagonal real / diagonal).
    """

    matrix: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("one-body operator must be a square matrix")
        scale = 1.0 + float(np.max(np.abs(mat))) if mat.size else 1.0
        if np.max(np.abs(mat - mat.conj().T)) > _HERM_TOL * scale:
            raise ValueError("one-body operator must be Hermitian")
        if self.kind not in ("laplacian", "multiplication", "gradient", "general"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind == "multiplication":
            if np.max(np.abs(mat - np.diag(np.diag(mat)))) > _HERM_TOL * scale:
                raise ValueError("multiplication operators must be diagonal")
        if self.kind == "laplacian":
            if np.max(np.abs(mat.imag)) > _HERM_TOL * scale:
                raise ValueError("laplacian must be real")
            off = np.triu(mat, 2)
            if np.max(np.abs(off)) > _HERM_TOL * scale:
                raise ValueError("laplacian must be tridiagonal")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


def build_laplacian(spec: LatticeSpec) -> OneBodyOperator:
    """Dirichlet finite-difference Laplacian: 2/h^2 on the diagonal, -1/h^2 off.

    Strictly positive definite, so every particle sector of the confining
    operator is invertible.
    """
    if spec.m < 2:
        raise ValueError("need at least two sites")
    if spec.h <= 0:
        raise ValueError("grid spacing must be positive")
    inv_h2 = 1.0 / spec.h**2
    mat = 2.0 * inv_h2 * np.eye(spec.m) - inv_h2 * (np.eye(spec.m, k=1) + np.eye(spec.m, k=-1))
    return OneBodyOperator(mat, kind="laplacian")


def multiplication_operator(values) -> OneBodyOperator:
    values = np.asarray(values, dtype=np.float64)
    return OneBodyOperator(np.diag(values), kind="multiplication")


def single_particle_hamiltonian(spec: LatticeSpec) -> OneBodyOperator:
    """h0 + V + r0 with V = v_plus - v_minus + v_c (the one-particle sector)."""
    h0 = build_laplacian(spec).matrix
    return OneBodyOperator(h0 + np.diag(spec.potential + spec.r0), kind="general")


def confining_hamiltonian(spec: LatticeSpec) -> OneBodyOperator:
    """h0 + v_c, the confining comparison operator."""
    h0 = build_laplacian(spec).matrix
    return OneBodyOperator(h0 + np.diag(spec.v_c), kind="general")


def _pair_energy(spec: LatticeSpec, sites) -> float:
    total = 0.0
    for a, b in itertools.combinations(sites, 2):
        total += spec.w[abs(a - b)]
    return total


def stability_constant(spec: LatticeSpec, n_max: int, statistics: str = "bosonic") -> float:
    """Smallest C0 >= 0 with sum_{i<j} w(x_i - x_j) >= -C0*n for all placements.

    Enumerates every configuration of n <= n_max particles exhaustively:
    distinct sites for fermions, sites with repetition for bosons (the
    latter dominates, so it is the conservative default).
    """
    if n_max < 2:
        return 0.0
    if statistics not in ("fermionic", "bosonic"):
        raise ValueError(f"unknown statistics {statistics!r}")
    chooser = itertools.combinations if statistics == "fermionic" else itertools.combinations_with_replacement
    worst = 0.0
    for n in range(2, n_max + 1):
        if statistics == "fermionic" and n > spec.m:
            break
        for sites in chooser(range(spec.m), n):
            worst = max(worst, -_pair_energy(spec, sites) / n)
    return worst


def default_spec(m, h=1.0, kappa=0.5, w0=0.4, r0=1.0, tilt=0.0, gamma=0.5) -> LatticeSpec:
    """Standard test instance: harmonic well, optional linear tilt, soft pair law.

    v_c(x) = kappa*(x - xbar)^2, v(x) = tilt*(x - xbar), w(d) = w0/(1 + d*h).
    For w0 >= 0 the pair constant C0 is zero, so any r0 > 0 is stable.
    """
    if int(m) != m or m < 2:
        raise ValueError(f"site count m must be an integer >= 2, got {m}")
    if not (h > 0):
        raise ValueError(f"grid spacing h must be positive, got {h}")
    x = np.arange(m) * h
    xbar = x.mean() if m else 0.0
    v_c = kappa * (x - xbar) ** 2
    v = tilt * (x - xbar)
    dists = np.arange(m) * h
    w = w0 / (1.0 + dists)
    return LatticeSpec(
        m=m,
        h=h,
        v_plus=np.clip(v, 0.0, None),
        v_minus=np.clip(-v, 0.0, None),
        v_c=v_c,
        w=w,
        r0=r0,
        gamma=gamma,
    )


def laplacian_quadratic_form(spec: LatticeSpec, psi) -> float:
    """Summation-by-parts value of <psi, h0 psi>:

    sum over edges of |psi_{i+1} - psi_i|^2 / h^2 plus the Dirichlet boundary
    terms (|psi_0|^2 + |psi_{m-1}|^2)/h^2. Agrees with the matrix quadratic
    form to machine precision.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    inv_h2 = 1.0 / spec.h**2
    edges = np.abs(np.diff(psi)) ** 2
    boundary = abs(psi[0]) ** 2 + abs(psi[-1]) ** 2
    return float(inv_h2 * (edges.sum() + boundary))
