"""Desk-scale toolkit for lattice Fock spaces: second quantization,
grand-canonical Gibbs states, local moment fields, and reconstruction of
the entropy-minimizing state under pointwise density/current/energy
constraints."""

from ._kernels import backend
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionCapError,
    InadmissibleTargetError,
    StabilityError,
)
from .lattice import (
    LatticeSpec,
    OneBodyOperator,
    build_laplacian,
    confining_hamiltonian,
    default_spec,
    multiplication_operator,
    single_particle_hamiltonian,
    stability_constant,
)
from .fock import (
    FockBasis,
    FockOperator,
    build_hamiltonian,
    confining_fock_operator,
    enumerate_basis,
    largest_stable_gamma,
    number_operator,
    second_quantize_onebody,
    second_quantize_twobody,
)
from .gibbs import (
    DensityMatrix,
    GibbsSummary,
    ThermoScan,
    entropy,
    entropy_lower_bound_check,
    fock_spectrum,
    free_energy,
    gibbs_state,
    pure_state,
    random_state,
    relative_entropy,
    thermo_scan,
)
from .moments import (
    MomentFields,
    ReducedDM1,
    ReducedDM2,
    moment_fields,
    one_particle_dm,
    site_pair_density,
    two_particle_dm,
)
from .solvers import (
    DualState,
    EntropyCurvePoint,
    FreeEnergyCurvePoint,
    MultiplierFields,
    ReconstructOptions,
    alpha_for_number,
    beta_for_energy,
    constraint_matrices,
    dual_hamiltonian,
    entropy_curve,
    free_energy_curve,
    reconstruct_local_gibbs,
)

__version__ = "0.1.0"
