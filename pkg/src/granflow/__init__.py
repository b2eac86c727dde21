"""Finite-volume multilayer shallow-flow simulator for dry granular media."""

from .multilayer import (
    H_DRY,
    Environment,
    GridState,
    InterfaceFields,
    LayerPartition,
    basal_shear_estimate,
    bottom_friction_bound,
    compute_interface_fields,
    interface_pressure,
    mass_transfer,
    shear_estimate,
    total_energy,
    vertical_velocity,
    viscous_coupling,
    xi_coefficient,
)
from .rheology import (
    GRAVITY,
    RHEOLOGY_PRESETS,
    Regularization,
    RegularizationMode,
    RheologyParams,
    constant_friction_coefficient,
    effective_viscosity,
    friction_coefficient,
    inertial_number,
    invert_friction,
)
from .scenarios import (
    CollapseSpec,
    DepositDiagnostics,
    UniformFlowSpec,
    bagnold_profile,
    collapse_initial,
    deposit_diagnostics,
    layer_average_bagnold,
    relative_error,
    run_collapse,
    run_uniform_flow,
)
from .solver import (
    Boundary,
    FrictionMode,
    RunResult,
    SolverConfig,
    SolverError,
    StepReport,
    exchange_step,
    friction_step,
    hyperbolic_step,
    run,
    stable_dt,
    step,
)

__version__ = "0.1.0"
