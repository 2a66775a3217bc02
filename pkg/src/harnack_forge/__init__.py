"""Sharp Harnack bounds for hypoelliptic kinetic diffusions.

The package constructs the sharp matrix bound N(t) on the Hessian of
log-densities of kinetic Fokker-Planck equations (Riccati integration,
matrix exponentials, and five closed-form curvature regimes), the
optimal-control costs entering the integrated Harnack inequality, and
verifies the resulting matrix, scalar, and integrated inequalities
against exact Gaussian solutions and a finite-difference solver.
"""

from .closed_forms import (
    CASE1,
    CASE2,
    CASE3,
    CASE4,
    CASE5,
    DomainError,
    ErrataRow,
    ORACLE_CALIBRATED,
    PRINTED,
    Regime,
    SFuncs,
    assemble_bound,
    classify,
    errata_csv,
    eval_sfuncs,
    printed_sfuncs,
    reconcile,
    validity_window,
)
from .control_cost import (
    ControlPath,
    ControlProblem,
    ConvergenceError,
    KernelHarnackReport,
    TranscribeResult,
    cost_csv,
    cost_identity_gap,
    energy_cost,
    harnack_rhs,
    hermite_control,
    log_harnack_rhs,
    steer_exact,
    transcribe_cost,
    verify_harnack_kernel,
)
from .gaussian_kernel import (
    GaussianState,
    chapman_gap,
    density,
    free_covariance,
    grid_density,
    kernel_state,
    log_density,
    log_hessian,
    pde_residual,
    propagate,
    scalar_sharpness_gap,
    sharpness_gap,
    transport_matrix,
)
from .kinetic_pde import (
    CFLError,
    CustomPotential,
    EvolveReport,
    GridField,
    HarnackCheckReport,
    Potential,
    QuadraticPotential,
    UntestableRegionError,
    ZeroPotential,
    cfl_rates,
    compute_h,
    curvature_of,
    estimate_log_hessian,
    evolve,
    kernel_field,
    load_snapshot,
    make_grid,
    matrix_implies_scalar_gap,
    save_snapshot,
    snapshot_csv,
    verify_matrix_harnack,
    verify_scalar_harnack,
)
from .riccati_engine import (
    BlockSym2n,
    ComparisonReport,
    CurvatureBound,
    SingularityError,
    StepUnderflowError,
    StructuralPair,
    SymmetryDriftError,
    S_from_M,
    bound_N,
    build_structural,
    comparison_check,
    exponential_route_residual,
    fundamental_M,
    hamiltonian_matrix,
    integrate_S,
    residual_defect,
    small_time_S,
    trajectory_to_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BlockSym2n",
    "CASE1",
    "CASE2",
    "CASE3",
    "CASE4",
    "CASE5",
    "CFLError",
    "ComparisonReport",
    "ControlPath",
    "ControlProblem",
    "ConvergenceError",
    "CurvatureBound",
    "CustomPotential",
    "DomainError",
    "ErrataRow",
    "EvolveReport",
    "GaussianState",
    "GridField",
    "HarnackCheckReport",
    "KernelHarnackReport",
    "ORACLE_CALIBRATED",
    "PRINTED",
    "Potential",
    "QuadraticPotential",
    "Regime",
    "SFuncs",
    "S_from_M",
    "SingularityError",
    "StepUnderflowError",
    "StructuralPair",
    "SymmetryDriftError",
    "TranscribeResult",
    "UntestableRegionError",
    "ZeroPotential",
    "assemble_bound",
    "bound_N",
    "build_structural",
    "cfl_rates",
    "chapman_gap",
    "classify",
    "comparison_check",
    "compute_h",
    "cost_csv",
    "cost_identity_gap",
    "curvature_of",
    "density",
    "energy_cost",
    "errata_csv",
    "estimate_log_hessian",
    "eval_sfuncs",
    "evolve",
    "exponential_route_residual",
    "free_covariance",
    "fundamental_M",
    "grid_density",
    "hamiltonian_matrix",
    "harnack_rhs",
    "hermite_control",
    "integrate_S",
    "kernel_field",
    "kernel_state",
    "load_snapshot",
    "log_density",
    "log_harnack_rhs",
    "log_hessian",
    "make_grid",
    "matrix_implies_scalar_gap",
    "pde_residual",
    "printed_sfuncs",
    "propagate",
    "reconcile",
    "residual_defect",
    "save_snapshot",
    "scalar_sharpness_gap",
    "sharpness_gap",
    "small_time_S",
    "snapshot_csv",
    "steer_exact",
    "trajectory_to_csv",
    "transcribe_cost",
    "transport_matrix",
    "validity_window",
    "verify_harnack_kernel",
    "verify_matrix_harnack",
    "verify_scalar_harnack",
]
