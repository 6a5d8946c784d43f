"""Best-arm identification in linear bandits via a phased exploration game."""

from .algorithm import (
    NonTerminationError,
    PelegConfig,
    PhaseDiag,
    PhaseParams,
    PhaseState,
    RunResult,
    eliminate,
    ols_estimate,
    phase_params,
    run,
    stop_check,
    track_select,
)
from .env import (
    DegenerateInstanceError,
    Instance,
    InstanceSummary,
    instance_from_json,
    instance_to_json,
    make_setting1,
    make_setting2,
    make_setting3,
    pull,
    summarize,
)
from .learners import (
    BestResponseSolution,
    ExpWtsLearner,
    InfeasibleBallError,
    best_response_ball,
    best_response_unconstrained,
)
from .linalg import (
    SingularMatrixError,
    inv_quad_form,
    min_eigenvalue,
    quad_form,
    rank_one_update,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateInstanceError",
    "Instance",
    "InstanceSummary",
    "NonTerminationError",
    "PelegConfig",
    "PhaseDiag",
    "PhaseParams",
    "PhaseState",
    "RunResult",
    "BestResponseSolution",
    "ExpWtsLearner",
    "InfeasibleBallError",
    "SingularMatrixError",
    "best_response_ball",
    "best_response_unconstrained",
    "eliminate",
    "instance_from_json",
    "instance_to_json",
    "inv_quad_form",
    "make_setting1",
    "make_setting2",
    "make_setting3",
    "min_eigenvalue",
    "ols_estimate",
    "phase_params",
    "pull",
    "quad_form",
    "rank_one_update",
    "run",
    "stop_check",
    "summarize",
    "track_select",
]
