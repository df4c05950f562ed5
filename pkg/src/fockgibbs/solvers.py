"""Optimization layer: thermodynamic root solves, global curves, dual ascent.

The monotone inverse problems E(0, beta0) = a and N(alpha0, beta) = a are
solved by bracket expansion plus bisection; strict monotonicity of E in beta
and N in alpha makes the roots unique.

The locally constrained entropy minimizer is recovered by maximizing the
concave dual

    d(lam) = -log Z(lam) - <lam, targets>,      rho(lam) = exp(-M[lam]) / Z,

where M[lam] carries one multiplier per scalar constraint: lam_n per site
(density), lam_u per edge (current), lam_e per site (total energy). The
dual gradient is exactly moment_fields(rho(lam)) - targets, so the residual
infinity norm doubles as the primal feasibility certificate. Steps are
Newton directions in the Kubo-Mori metric (the curvature of log Z) with an
Armijo backtracking line search, falling back to plain gradient ascent when
the metric is ill-conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import moments as _moments
from .errors import ConvergenceError, InadmissibleTargetError
from .fock import FockBasis, FockOperator, build_hamiltonian, number_operator, second_quantize_onebody
from .gibbs import DensityMatrix, FockSpectrum, boltzmann_state, entropy, fock_spectrum
from .lattice import LatticeSpec
from ._kernels import pair_diagonal

__all__ = [
    "MultiplierFields",
    "ReconstructOptions",
    "DualState",
    "EntropyCurvePoint",
    "FreeEnergyCurvePoint",
    "beta_for_energy",
    "alpha_for_number",
    "entropy_curve",
    "free_energy_curve",
    "dual_hamiltonian",
    "constraint_matrices",
    "reconstruct_local_gibbs",
]

ROOT_TOL = 1e-9
_MAX_BISECT = 400


@dataclass(frozen=True)
class MultiplierFields:
    """Dual variables: one per density site, current edge, and energy site."""

    lam_n: np.ndarray
    lam_u: np.ndarray
    lam_e: np.ndarray

    def __post_init__(self):
        for name in ("lam_n", "lam_u", "lam_e"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        m = self.lam_n.shape[0]
        if self.lam_u.shape != (m - 1,) or self.lam_e.shape != (m,):
            raise ValueError("multiplier fields must have shapes (m,), (m-1,), (m,)")

    @property
    def sites(self) -> int:
        return self.lam_n.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.lam_n, self.lam_u, self.lam_e])

    @staticmethod
    def from_vector(vec, m) -> "MultiplierFields":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (3 * m - 1,):
            raise ValueError(f"expected {3 * m - 1} multipliers, got {vec.shape}")
        return MultiplierFields(vec[:m], vec[m : 2 * m - 1], vec[2 * m - 1 :])

    @staticmethod
    def uniform(m, lam_n=0.0, lam_u=0.0, lam_e=0.0) -> "MultiplierFields":
        return MultiplierFields(
            np.full(m, float(lam_n)), np.full(m - 1, float(lam_u)), np.full(m, float(lam_e))
        )


@dataclass(frozen=True)
class ReconstructOptions:
    tol: float = 1e-6                 # residual infinity norm, field units
    max_iter: int = 500
    lambda_cap: float = 1e4
    newton_cond_cap: float = 1e8
    armijo: float = 1e-4
    min_step: float = 2.0**-50


@dataclass
class DualState:
    """Result of a dual-ascent reconstruction."""

    multipliers: MultiplierFields
    rho: DensityMatrix
    residual: _moments.MomentFields
    dual_value: float
    residual_norm: float
    achieved: _moments.MomentFields
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)  # (iteration, dual_value, residual_norm)


@dataclass(frozen=True)
class EntropyCurvePoint:
    a: float
    beta0: float
    f: float
    S_check: float


@dataclass(frozen=True)
class FreeEnergyCurvePoint:
    a: float
    alpha0: float
    g: float
    F_check: float


def _beta_root(spectrum: FockSpectrum, a, rel_tol=ROOT_TOL):
    if a <= 0:
        raise ValueError(f"target energy must be positive, got {a}")
    e_sup = float(spectrum.energies.mean())  # beta -> 0 limit on the truncation
    if a >= e_sup:
        raise ValueError(
            f"target energy {a} outside the attainable range (0, {e_sup}) of this truncation"
        )

    def energy(beta):
        p = spectrum.probabilities(0.0, beta)
        return float(p @ spectrum.energies)

    lo = hi = 1.0
    while energy(hi) > a:
        hi *= 2.0
        if hi > 1e18:
            raise ConvergenceError("bracket expansion failed (beta too large)")
    while energy(lo) < a:
        lo *= 0.5
        if lo < 1e-300:
            raise ConvergenceError("bracket expansion failed (beta too small)")
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        e_mid = energy(mid)
        if abs(e_mid - a) <= rel_tol * a:
            return mid
        if e_mid > a:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection stalled at |E - a| = {abs(energy(0.5 * (lo + hi)) - a)}")


def _alpha_root(spectrum: FockSpectrum, beta, a, rel_tol=ROOT_TOL):
    if beta <= 0:
        raise ValueError("beta must be positive")
    if a <= 0:
        raise ValueError(f"target particle number must be positive, got {a}")

    def number(alpha):
        p = spectrum.probabilities(alpha, beta)
        return float(p @ spectrum.numbers)

    n0 = number(0.0)
    if a > n0 * (1.0 + 1e-12):
        raise ValueError(
            f"target particle number {a} exceeds N(0, beta) = {n0}; lower beta to make it attainable"
        )
    if abs(n0 - a) <= rel_tol * a:
        return 0.0
    lo, hi = 0.0, 1.0
    while number(hi) > a:
        hi *= 2.0
        if hi > 1e18:
            raise ConvergenceError("bracket expansion failed (alpha too large)")
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        n_mid = number(mid)
        if abs(n_mid - a) <= rel_tol * a:
            return mid
        if n_mid > a:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError("bisection stalled in alpha root solve")


def beta_for_energy(H: FockOperator, Nop: FockOperator, a, rel_tol=ROOT_TOL) -> float:
    """beta0 with E(0, beta0) = a to |E - a| <= rel_tol * a (monotone bisection)."""
    return _beta_root(fock_spectrum(H, Nop), a, rel_tol)


def alpha_for_number(H: FockOperator, Nop: FockOperator, beta, a, rel_tol=ROOT_TOL) -> float:
    """alpha0 >= 0 with N(alpha0, beta) = a; requires a <= N(0, beta)."""
    return _alpha_root(fock_spectrum(H, Nop), beta, a, rel_tol)


def entropy_curve(H: FockOperator, Nop: FockOperator, a_grid) -> list[EntropyCurvePoint]:
    """Minimal entropy at fixed total energy: f(a) = -log Z(0, beta0(a)) - a beta0(a).

    The S_check column recomputes the entropy from the assembled Gibbs state
    (eigenvalues of rho rather than the closed form); the two agree to 1e-8.
    f is strictly decreasing with f'(a) = -beta0(a).
    """
    spectrum = fock_spectrum(H, Nop)
    points = []
    for a in np.asarray(a_grid, dtype=float):
        b0 = _beta_root(spectrum, a)
        f_val = -spectrum.log_partition(0.0, b0) - a * b0
        exponent = FockOperator(
            H.basis, b0 * H.matrix, block_diagonal=H.block_diagonal, _validated=True
        )
        state, _, _ = boltzmann_state(exponent)
        points.append(EntropyCurvePoint(float(a), b0, f_val, entropy(state)))
    return points


def free_energy_curve(H: FockOperator, Nop: FockOperator, beta, a_grid) -> list[FreeEnergyCurvePoint]:
    """Minimal free energy at fixed particle number: beta g(a) = -log Z - a alpha0(a).

    Valid whenever N(0, beta) >= max(a_grid); g is strictly decreasing with
    beta g'(a) = -alpha0(a). F_check recomputes S/beta + E from the state.
    """
    a_grid = np.asarray(a_grid, dtype=float)
    spectrum = fock_spectrum(H, Nop)
    p0 = spectrum.probabilities(0.0, beta)
    n_at_zero = float(p0 @ spectrum.numbers)
    a_top = float(a_grid.max())
    if n_at_zero < a_top * (1.0 - 1e-12):
        raise ValueError(
            f"beta = {beta} too large for target {a_top}: N(0, beta) = {n_at_zero}"
        )
    points = []
    for a in a_grid:
        a0 = _alpha_root(spectrum, beta, a)
        g_val = (-spectrum.log_partition(a0, beta) - a * a0) / beta
        exponent = FockOperator(
            H.basis,
            beta * H.matrix + a0 * np.diag(H.basis.totals.astype(np.complex128)),
            block_diagonal=H.block_diagonal,
            _validated=True,
        )
        state, _, _ = boltzmann_state(exponent)
        f_check = entropy(state) / beta + state.expectation(H)
        points.append(FreeEnergyCurvePoint(float(a), a0, g_val, f_check))
    return points


def _edge_matrix(j, m):
    """One-body kinetic edge matrix (h^3 scale), boundary terms folded in."""
    k = np.zeros((m, m), dtype=np.complex128)
    k[j, j] += 1.0
    k[j + 1, j + 1] += 1.0
    k[j, j + 1] -= 1.0
    k[j + 1, j] -= 1.0
    if j == 0:
        k[0, 0] += 1.0
    if j == m - 2:
        k[m - 1, m - 1] += 1.0
    return k


def _pair_weight_matrix(spec: LatticeSpec):
    idx = np.arange(spec.m)
    return spec.w[np.abs(idx[:, None] - idx[None, :])]


def dual_hamiltonian(spec: LatticeSpec, basis: FockBasis, mult: MultiplierFields) -> FockOperator:
    """Assemble M[lam] = dGamma(m1[lam]) + weighted pair interaction.

    m1 collects the density multipliers on the diagonal, the energy
    multipliers against the potential/kinetic stencils (edge terms weighted
    by the mean of the endpoint lam_e), and the current multipliers as
    imaginary nearest-neighbor elements. Pairs (i, j) of the interaction
    are weighted by (lam_e_i + lam_e_j)/2. Uniform lam_e = beta*h,
    lam_n = alpha*h, lam_u = 0 reproduces beta*H + alpha*N exactly.
    """
    m, h = spec.m, spec.h
    if mult.sites != m:
        raise ValueError("multiplier fields do not match the lattice size")
    m1 = np.zeros((m, m), dtype=np.complex128)
    m1[np.arange(m), np.arange(m)] += (mult.lam_n + mult.lam_e * (spec.potential + spec.r0)) / h
    inv_h3 = 1.0 / h**3
    inv_h2 = 1.0 / h**2
    for j in range(m - 1):
        mu = 0.5 * (mult.lam_e[j] + mult.lam_e[j + 1])
        m1 += mu * inv_h3 * _edge_matrix(j, m)
        m1[j, j + 1] += -0.5j * mult.lam_u[j] * inv_h2
        m1[j + 1, j] += 0.5j * mult.lam_u[j] * inv_h2
    pairw = _pair_weight_matrix(spec) * (0.5 * (mult.lam_e[:, None] + mult.lam_e[None, :])) / h
    diag = pair_diagonal(basis.occupations, pairw)
    mat = second_quantize_onebody(m1, basis).matrix + np.diag(diag.astype(np.complex128))
    return FockOperator(basis, mat, block_diagonal=True, _validated=True)


def constraint_matrices(spec: LatticeSpec, basis: FockBasis) -> np.ndarray:
    """Stack of constraint observables C_k with Tr(C_k rho) = field value k.

    Order matches MomentFields.constraint_vector(): site densities, edge
    currents, site total energies. dual_hamiltonian(lam) equals
    sum_k lam_k C_k by construction.
    """
    m, h = spec.m, spec.h
    dim = basis.dimension
    occ = basis.occupations
    mats = np.zeros((3 * m - 1, dim, dim), dtype=np.complex128)
    pos = 0
    for i in range(m):
        mats[pos] = np.diag((occ[:, i] / h).astype(np.complex128))
        pos += 1
    inv_h2 = 1.0 / h**2
    for j in range(m - 1):
        g = np.zeros((m, m), dtype=np.complex128)
        g[j, j + 1] = -0.5j * inv_h2
        g[j + 1, j] = 0.5j * inv_h2
        mats[pos] = second_quantize_onebody(g, basis).matrix
        pos += 1
    inv_h3 = 1.0 / h**3
    wmat = _pair_weight_matrix(spec)
    potential = spec.potential
    for i in range(m):
        b = np.zeros((m, m), dtype=np.complex128)
        b[i, i] += (potential[i] + spec.r0) / h
        if i >= 1:
            b += 0.5 * inv_h3 * _edge_matrix(i - 1, m)
        if i <= m - 2:
            b += 0.5 * inv_h3 * _edge_matrix(i, m)
        pairw = np.zeros((m, m))
        for j in range(m):
            if j == i:
                pairw[i, i] = wmat[i, i]
            else:
                a, c = min(i, j), max(i, j)
                pairw[a, c] += 0.5 * wmat[i, j]
        diag = pair_diagonal(occ, pairw / h)
        mats[pos] = second_quantize_onebody(b, basis).matrix + np.diag(diag.astype(np.complex128))
        pos += 1
    return mats


def _log_mean(p):
    """Logarithmic-mean matrix L(p_a, p_b); the Kubo-Mori weights."""
    pf = np.clip(p, 1e-300, None)
    la = np.log(pf)
    num = pf[:, None] - pf[None, :]
    den = la[:, None] - la[None, :]
    small = np.abs(den) < 1e-12
    safe = np.where(small, 1.0, den)
    return np.where(small, 0.5 * (pf[:, None] + pf[None, :]), num / safe)


def _km_covariance(blocks, cons, c_vals):
    """Kubo-Mori covariance of the constraint observables at rho(lam)."""
    n_cons = cons.shape[0]
    cov = np.zeros((n_cons, n_cons))
    for sl, vecs, p in blocks:
        if p.size == 0:
            continue
        weight = np.sqrt(_log_mean(p))
        transformed = np.empty((n_cons, p.size, p.size), dtype=np.complex128)
        for k in range(n_cons):
            transformed[k] = weight * (vecs.conj().T @ cons[k][sl, sl] @ vecs)
        cov += np.einsum("kab,lab->kl", transformed, transformed.conj()).real
    cov -= np.outer(c_vals, c_vals)
    return cov


def _initial_multipliers(spec, basis, targets, init):
    if isinstance(init, MultiplierFields):
        return init.to_vector()
    if isinstance(init, np.ndarray):
        return MultiplierFields.from_vector(init, spec.m).to_vector()
    if init == "zero":
        return MultiplierFields.uniform(spec.m).to_vector()
    if init != "presolve":
        raise ValueError(f"unknown initialization {init!r}")
    # Global pre-solve: match the target totals with uniform multipliers,
    # treating the energy first (the number constraint needs its beta).
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    spectrum = fock_spectrum(ham, nop)
    total_e = spec.h * float(targets.e.sum())
    total_n = spec.h * float(targets.n.sum())
    try:
        beta0 = _beta_root(spectrum, total_e)
    except (ValueError, ConvergenceError):
        beta0 = 1.0
    try:
        alpha0 = _alpha_root(spectrum, beta0, total_n)
    except (ValueError, ConvergenceError):
        alpha0 = 0.0
    return MultiplierFields.uniform(
        spec.m, lam_n=alpha0 * spec.h, lam_u=0.0, lam_e=beta0 * spec.h
    ).to_vector()


def reconstruct_local_gibbs(
    spec: LatticeSpec,
    basis: FockBasis,
    targets: _moments.MomentFields,
    options: ReconstructOptions | None = None,
    init="presolve",
) -> DualState:
    """Entropy minimizer under pointwise (n, u, e) constraints by dual ascent.

    The targets should be the moment fields of some state on this basis;
    boundary or hand-written fields may be numerically infeasible, which
    surfaces as diverging multipliers (InadmissibleTargetError) or an
    iteration cap (ConvergenceError). At convergence the state exp(-M[lam])/Z
    is primal feasible to options.tol and satisfies the strong-duality
    identity S(rho) + <lam, targets> + log Z = 0.
    """
    opts = options or ReconstructOptions()
    if targets.sites != spec.m:
        raise ValueError("targets do not match the lattice size")
    if np.any(targets.n < -1e-12):
        raise ValueError("target density has negative entries; not the moments of any state")

    c_target = targets.constraint_vector()
    cons = constraint_matrices(spec, basis)
    lam = _initial_multipliers(spec, basis, targets, init)

    def evaluate(vec):
        mult = MultiplierFields.from_vector(vec, spec.m)
        op = dual_hamiltonian(spec, basis, mult)
        state, logz, blocks = boltzmann_state(op)
        dual = -logz - float(vec @ c_target)
        return mult, state, blocks, dual

    def dual_only(vec):
        mult = MultiplierFields.from_vector(vec, spec.m)
        op = dual_hamiltonian(spec, basis, mult)
        vals = np.concatenate(
            [np.linalg.eigvalsh(op.matrix[sl, sl]) for _, sl in basis.sectors()]
        )
        xmin = vals.min()
        logz = float(-xmin + np.log(np.exp(-(vals - xmin)).sum()))
        return -logz - float(vec @ c_target)

    trace = []
    best_residual = np.inf
    mult, state, blocks, dual = evaluate(lam)
    for iteration in range(opts.max_iter):
        achieved = _moments.moment_fields(state, spec)
        grad = achieved.constraint_vector() - c_target
        residual_norm = float(np.max(np.abs(grad)))
        trace.append((iteration, dual, residual_norm))
        if residual_norm <= opts.tol:
            diff = achieved.difference(targets)
            return DualState(
                multipliers=mult,
                rho=state,
                residual=diff,
                dual_value=dual,
                residual_norm=residual_norm,
                achieved=achieved,
                iterations=iteration,
                converged=True,
                trace=trace,
            )
        if float(np.max(np.abs(lam))) > opts.lambda_cap and residual_norm >= best_residual:
            raise InadmissibleTargetError(
                "dual multipliers diverged without residual progress; "
                f"targets look numerically inadmissible (residual {residual_norm:.3e})",
                residual=residual_norm,
            )
        best_residual = min(best_residual, residual_norm)

        c_now = achieved.constraint_vector()
        directions = []
        cov = _km_covariance(blocks, cons, c_now)
        cond = np.linalg.cond(cov)
        if np.isfinite(cond) and cond < opts.newton_cond_cap:
            try:
                newton = np.linalg.solve(cov, grad)
                if float(grad @ newton) > 0:
                    directions.append(newton)
            except np.linalg.LinAlgError:
                pass
        directions.append(grad)  # gradient ascent fallback

        stepped = False
        # absolute slack: near the optimum the dual is flat to rounding,
        # which would otherwise starve the final Newton steps
        slack = 1e-13 * (1.0 + abs(dual))
        for direction in directions:
            slope = float(grad @ direction)
            t = 1.0
            while t >= opts.min_step:
                candidate = lam + t * direction
                if dual_only(candidate) >= dual + opts.armijo * t * slope - slack:
                    lam = candidate
                    mult, state, blocks, dual = evaluate(lam)
                    stepped = True
                    break
                t *= 0.5
            if stepped:
                break
        if not stepped:
            raise ConvergenceError(
                f"dual line search stalled at residual {residual_norm:.3e}",
                residual=residual_norm,
            )
    raise ConvergenceError(
        f"dual ascent hit the iteration cap ({opts.max_iter}) at residual {best_residual:.3e}",
        residual=best_residual,
    )
