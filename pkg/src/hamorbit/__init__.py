"""Variational solver for fixed-energy periodic orbits of q'' + grad V(q) = 0.

Workflow: describe the problem (potential, dimension, energy level, symmetry
class) as a :class:`ProblemSpec`, find a positive critical point of the loop
functional either by constrained minimization or by the mountain-pass path
deformation, then :func:`synthesize` the physical orbit and check its
residuals.
"""

from .errors import (
    BadIndexError,
    BaseThroughOriginError,
    BlowupError,
    DomainError,
    EndpointGrowthError,
    ExpressionParseError,
    HamorbitError,
    NoBracketError,
    NonpositiveActionError,
    OddNodeCountError,
    OrbitFileError,
    PathCollapseError,
    ZeroLoopError,
)
from .functional import (
    NEHARI,
    CpsRecord,
    GradientSphere,
    NehariConstraint,
    ProblemSpec,
    action,
    action_gradient,
    constraint_distance,
    constraint_gradient,
    constraint_value,
    cps_append,
    scaling_root,
    weighted_gradient_norm,
)
from .loopspace import (
    LoopPath,
    circle_loop,
    dirichlet_energy,
    h1_norm,
    integrate,
    loop_mean,
    project_symmetric,
    random_loop,
    resample,
    shift,
    sobolev_precondition,
    velocity,
    zero_loop,
)
from .orbit import OrbitResult, closure_gap, orbit_period, orbit_residuals, synthesize
from .potentials import (
    ExpressionPotential,
    HypothesisReport,
    PotentialModel,
    PowerLawPotential,
    SamplerConfig,
    check_hypotheses,
    hessian_ray,
    parse_potential,
    second_radial,
)
from .solvers import (
    SolveOptions,
    SolveReport,
    build_endpoint,
    make_initial_loop,
    minimize_on_nehari,
    mountain_pass,
    separation_check,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
