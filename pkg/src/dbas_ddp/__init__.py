"""Safety-embedded trajectory optimization with discrete barrier states (DBaS).

The barrier state is appended to the plant so that DDP sees safety as
boundedness of a state. Penalty-DDP and CBF-QP filtering are included as
baselines, and :mod:`dbas_ddp.bench` runs the randomized comparisons.
"""

from .baselines import CBFFilterSpec, cbf_filter_step, cbf_rollout, ecbf_constraint, penalty_solve
from .cost import PenaltyCost, QuadraticCost, TrackingReference, figure_eight_reference
from .dynamics import CartPole, DiffDrive, PointRobot2D, Quadrotor12, make_model
from .errors import (
    BackwardPassError,
    ConfigError,
    DBaSError,
    FilterInfeasibleError,
    ModelBlowUpError,
    NormalizationError,
    UnsafeInitialError,
    UnsafeStateError,
)
from .safety import (
    AugmentedModel,
    BarrierFunction,
    CoordinateBound,
    DBaSSpec,
    ShapeConstraint,
    SphericalObstacle,
    augment,
    dbas_next,
    safety_check,
)
from .solver import Policy, SolverOptions, SolveResult, backward_pass, forward_pass, line_search, solve

__version__ = "0.1.0"
