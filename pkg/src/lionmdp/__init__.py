"""Anti-Lion-attack strategy planner for cognitive radio: finite-MDP model,
value-iteration solver, parameter sweeps, and a slot-level Monte-Carlo
simulator for cross-validation."""

from .mdp import (
    MdpModel,
    Policy,
    SolveReport,
    ValidationReport,
    ValueFunction,
    bellman_backup,
    enumerate_policies_brute_force,
    evaluate_policy_exact,
    validate_model,
    value_iteration,
)
from .model import (
    HEAVY,
    LION,
    PRIMARY,
    BandOccupancy,
    LionAction,
    LionParams,
    LionState,
    admissible_actions,
    build_mdp,
    lion_attack_probability,
    lion_states,
    primary_occupancy,
    reward,
    transition_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "MdpModel",
    "Policy",
    "SolveReport",
    "ValidationReport",
    "ValueFunction",
    "bellman_backup",
    "enumerate_policies_brute_force",
    "evaluate_policy_exact",
    "validate_model",
    "value_iteration",
    "HEAVY",
    "LION",
    "PRIMARY",
    "BandOccupancy",
    "LionAction",
    "LionParams",
    "LionState",
    "admissible_actions",
    "build_mdp",
    "lion_attack_probability",
    "lion_states",
    "primary_occupancy",
    "reward",
    "transition_distribution",
    "__version__",
]
