"""Bayesian Recursive Nash Equilibrium for crowd navigation.

Sampling-based iterative Bayesian updates that find the mixed-strategy Nash
equilibrium of a collision-avoidance game, plus a receding-horizon planner,
simulation harness and benchmark CLI built around them.
"""

from .gp import (
    Anchor,
    CovarianceFactorizationError,
    GPConditioning,
    KernelSpec,
    NominalStrategy,
    condition_gp,
    goal_nominal,
    pedestrian_mean,
    pedestrian_nominal,
    robot_mean,
    sample_trajectories,
)
from .risk import (
    RiskParams,
    configure_threads,
    expected_risk_profile,
    joint_expected_risk,
    pairwise_risk,
    risk_matrix,
)
from .solver import (
    EnvelopeTooLooseError,
    SolveConfig,
    SolveResult,
    SolverError,
    free_energy,
    kl_estimate,
    risk_reduction_check,
    solve,
    solve_samples,
    update_agent_strategy_rs,
    update_agent_weights_is,
)
from .strategy import (
    AgentObservation,
    DegenerateWeightsError,
    GridMismatchError,
    SampledMixedStrategy,
    TimeGrid,
    Trajectory,
    min_pairwise_distance,
    normalize_weights,
    weighted_mean_trajectory,
)

__version__ = "0.1.0"
