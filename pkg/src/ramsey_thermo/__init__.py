"""Numerical thermodynamics of a driven, lossy cavity rotating an atomic qubit.

The package integrates the Lindblad master equation of a two-level atom
coupled to a damped, resonantly driven field mode, in three equivalent
pictures, and extracts the atomic von Neumann entropy together with the
normalised work and heat fluxes that characterise when the device acts as a
classical rotation versus an entangling quantum channel.
"""

__version__ = "0.1.0"

from .dynamics import (
    LindbladGenerator,
    Picture,
    StiffnessError,
    SystemParams,
    Trajectory,
    apply_generator,
    build_generator,
    evolve,
    evolve_expm,
    evolve_to_inversion_zero,
    expectation,
    integrate_chain,
    liouvillian_matrix,
    locate_inversion_zero,
)
from .effective import (
    CrossingResult,
    RegimeError,
    critical_drive,
    crossing_point,
    damped_rabi_oracle,
    effective_tstar,
)
from .experiments import (
    Fig1Result,
    NoCrossingError,
    SweepResult,
    SweepRow,
    default_g_grid,
    find_tstar,
    run_fig1,
    run_fig2,
    run_fig3,
)
from .hilbert import (
    LN2,
    InvariantViolation,
    coherent_state,
    displacement,
    excited_vacuum_density,
    fock_lowering,
    partial_trace_field,
    qubit_operators,
    tensor,
    validate_density_matrix,
    von_neumann_entropy,
)
from .thermo import (
    FluxSample,
    PhotonAccounting,
    energy_balance,
    flux_samples,
    heat_flux_norm_effective,
    heat_flux_norm_full,
    integrated_fluxes,
    photon_accounting,
    work_flux_norm,
)

__all__ = [
    "CrossingResult",
    "Fig1Result",
    "FluxSample",
    "InvariantViolation",
    "LN2",
    "LindbladGenerator",
    "NoCrossingError",
    "PhotonAccounting",
    "Picture",
    "RegimeError",
    "StiffnessError",
    "SweepResult",
    "SweepRow",
    "SystemParams",
    "Trajectory",
    "apply_generator",
    "build_generator",
    "coherent_state",
    "critical_drive",
    "crossing_point",
    "damped_rabi_oracle",
    "default_g_grid",
    "displacement",
    "effective_tstar",
    "energy_balance",
    "evolve",
    "evolve_expm",
    "evolve_to_inversion_zero",
    "expectation",
    "excited_vacuum_density",
    "find_tstar",
    "integrate_chain",
    "locate_inversion_zero",
    "flux_samples",
    "fock_lowering",
    "heat_flux_norm_effective",
    "heat_flux_norm_full",
    "integrated_fluxes",
    "liouvillian_matrix",
    "partial_trace_field",
    "photon_accounting",
    "qubit_operators",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "tensor",
    "validate_density_matrix",
    "von_neumann_entropy",
    "work_flux_norm",
]
