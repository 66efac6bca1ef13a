"""Solver for the parabolic fractional obstacle problem on an interval.

The fractional Laplacian is realized through the truncated weighted cylinder
extension, discretized by graded tensor-product finite elements in space and
backward Euler in time; each step is a bound-constrained SPD solve handled
by a primal-dual active set iteration.  A spectral collocation solver of the
trace problem serves as an independent reference, and a study harness checks
the predicted convergence rates.
"""

from .spectral import (
    FracParams,
    SpectralField,
    eigenpair,
    gamma_fn,
    hs_norm,
    linear_exact_solution,
    make_params,
    project_to_spectral,
)
from .mesh import (
    BaseMesh,
    GradedPartition,
    TensorMesh,
    balanced_resolution,
    base_mesh,
    graded_partition,
    tensor_mesh,
    truncation_height,
)
from .assembly import (
    ElementMatrix,
    SparseSym,
    assemble_stiffness,
    assemble_trace_mass,
    assemble_weighted_mass,
    cg_solve,
    local_stiffness,
    weighted_moment,
)
from .fields import BilinearField
from .interp import (
    Mollifier,
    harmonic_extension,
    l_interp,
    make_mollifier,
    pi_interp,
    r_interp,
)
from .vi import (
    StepSystem,
    VISolution,
    build_step_system,
    complementarity_residual,
    enumerate_active_sets,
    pdas_solve,
    psor_solve,
)
from .timestep import (
    ProblemData,
    Trajectory,
    discrete_obstacle,
    energy_diagnostics,
    error_E,
    error_calE,
    init_state,
    interp_eval,
    run,
    step,
    time_average_f,
)
from .oracle import OracleConfig, OracleTrajectory, fractional_stiffness, spectral_vi_solve
from .presets import get_preset
from .closedforms import extension_profile, harmonic_target, sinh_extension
from .studies import (
    RateReport,
    StudySpec,
    emit_report,
    fit_loglog_slope,
    run_interp_study,
    run_space_rate_study,
    run_time_rate_study,
    run_truncation_study,
)

__version__ = "0.1.0"
