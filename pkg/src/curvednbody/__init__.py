"""Gravitational N-body simulation on constant-curvature spaces.

The same flat initial data can be run on the 3-sphere (kappa > 0), in
Euclidean space (kappa = 0), or on the hyperbolic 3-sphere (kappa < 0);
the production equations of motion are valid for every curvature and reduce
exactly to Newton's equations at kappa = 0.  Alternate formulations, the
first integrals with their kappa = 0 bifurcation, and a scenario-driven CLI
are included.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AntipodalSingularity,
    AtProjectionPole,
    Collision,
    CurvedNBodyError,
    FormulationInvalidAtKappa,
    FrameMismatch,
    LiftOutOfRange,
    MaxStepsExceeded,
    NegativeSeparationSquare,
    OffManifold,
    OutsideDisk,
    ScenarioValidationError,
    SingularConfiguration,
    SingularMetric,
    SingularityReached,
    StepUnderflow,
    ZeroCurvature,
    ZeroCurvatureShift,
)
from .geometry import (  # noqa: F401
    Curvature,
    Frame,
    conformal_factor,
    constraint_residuals_centered,
    constraint_residuals_northpole,
    geodesic_distance,
    normalize_to_manifold,
    pair_separation,
    project_velocity_to_tangent,
    shift_to_centered,
    shift_to_northpole,
    signed_dot,
    stereo_lift,
    stereo_project,
)
from .potentials import (  # noqa: F401
    PairTerms,
    chordal_accel_terms,
    chordal_potential,
    cotangent_gradient,
    cotangent_potential,
    pair_breakdown,
    separation_matrix,
    stereo_gradient_zbar,
    stereo_potential,
)
from .dynamics import (  # noqa: F401
    Formulation,
    SystemState,
    accel_centered,
    accel_intrinsic_2d,
    accel_newtonian,
    accel_northpole_extrinsic,
    accel_unified,
    acceleration,
    state_to_centered,
    state_to_northpole,
    stereo_pushforward,
)
from .conserved import (  # noqa: F401
    AuditResult,
    ConservedReport,
    build_report,
    energy,
    flat_only_integrals,
    hybrid_momenta,
    integral_audit,
    kinetic_energy,
    wedge_momenta,
)
from .integrators import (  # noqa: F401
    IntegratorConfig,
    StepOutcome,
    Trajectory,
    integrate,
    project_state,
    step,
)
from .scenario_io import (  # noqa: F401
    Scenario,
    SweepResult,
    TrajectoryRecord,
    curvature_sweep,
    initial_state,
    lift_to_curvature,
    load_scenario,
    parse_scenario,
    run_scenario,
    serialize_scenario,
)
