"""Faceted motion of one-dimensional graphs by weighted curvature.

Profiles are continuous piecewise-linear functions whose slopes live on a
fixed finite grid; the flow moves each face by its crystalline curvature
and handles faces vanishing and, for moving walls, being created.  The
package splits along the natural seams:

    energy    admissible slope grids, convex densities, angular forms,
              Wulff shapes
    profile   admissible profiles, validation, construction from smooth
              data, collapse surgery
    dynamics  boundary closures and the face-velocity / corner-velocity
              system
    evolve    event-aware integration loop, trajectories, CSV/JSONL output
    reference exact series and dense finite-difference oracles
    metrics   exact quadrature errors against an oracle, rate fits
    config    JSON run configurations
    cli       batch subcommands (run, converge, energy, validate)
"""

from .config import Problem, RunConfig, build_problem, parse_config
from .dynamics import (
    BoundaryCondition,
    ConstantNeumann,
    FlowModel,
    GeneralDirichlet,
    GhostExtension,
    HomogeneousDirichlet,
    assemble_rates,
    coefficients,
    corner_velocity,
    ghost_extension,
    insert_boundary_face,
)
from .energy import (
    AngularEnergy,
    CrystallineEnergy,
    GrowthReport,
    SlopeGrid,
    SmoothEnergy,
    WulffPolygon,
    angular_face_velocity,
    angular_from_fourier,
    angular_to_cartesian,
    area_energy,
    build_slope_grid,
    check_growth_conditions,
    check_strict_stability,
    delta,
    delta_tilde,
    face_velocity,
    frank_diagram,
    quadratic_energy,
    theta_from_slope,
    total_energy,
    w_tilde_prime,
    wulff_polygon,
)
from .errors import (
    ConfigError,
    CoverageError,
    CrystalflowError,
    DegenerateFace,
    EventLocalizationError,
    GridError,
    InternalInconsistency,
    InvalidProfile,
    NotAFacet,
    NotStrictlyStable,
    StepRejected,
    UnboundedWulffSet,
    UnsupportedCollapse,
)
from .evolve import (
    Event,
    IntegratorOptions,
    Trajectory,
    run,
    write_events_jsonl,
    write_monitors_csv,
    write_snapshots_csv,
)
from .metrics import (
    ErrorReport,
    compare,
    face_quadrature,
    fit_rate,
    h1_error,
    mean_value,
    slope_error_l2,
    value_error_l2,
    write_convergence_csv,
)
from .profile import (
    Profile,
    build_initial,
    initial_fit_report,
    merge_collapsed,
    validate,
    validate_or_raise,
)
from .reference import (
    FourierSolution,
    ReferenceSolution,
    exact_heat,
    exact_heat_t,
    exact_heat_x,
    exact_heat_xxx,
    fd_reference,
)

__version__ = "0.1.0"
