"""Capacity-constrained matching with learned deferral to human decision makers.

The package splits a pool of individuals between an optimizing solver and a
human decision maker: the solver fills all but a budgeted number of slots by
maximum-weight bipartite matching, the human places the remainder, and a UCB1
bandit learns how large that human budget should be.
"""

__version__ = "0.1.0"

from .bandit import (
    ArmState,
    RoundLog,
    empirical_regret,
    reward,
    run_ucb1,
    select_arm,
)
from .generation import (
    BetaParamTable,
    GeneratorConfig,
    PatientInfo,
    confidence_score,
    sample_instance,
    sample_outcome,
    success_probability,
)
from .humans import (
    CompletionStrategy,
    HumanDecisionRecord,
    NoRecordError,
    RecordValidationError,
    SimulatedHuman,
    complete_matching,
    greedy_human,
    load_records,
    noisy_greedy_human,
    replay_human,
    save_records,
    stratify_participants,
    truncated_human,
)
from .matching import (
    DimensionMismatchError,
    EnumerationBoundError,
    InfeasibleMatchingError,
    MatchInstance,
    Matching,
    ResidualInstance,
    ResourceSet,
    brute_force_matching,
    matching_utility,
    residual,
    solve_imperfect_matching,
)
from .special import beta_cdf, beta_quantile

__all__ = [
    "ArmState",
    "BetaParamTable",
    "CompletionStrategy",
    "DimensionMismatchError",
    "EnumerationBoundError",
    "GeneratorConfig",
    "HumanDecisionRecord",
    "InfeasibleMatchingError",
    "MatchInstance",
    "Matching",
    "NoRecordError",
    "PatientInfo",
    "RecordValidationError",
    "ResidualInstance",
    "ResourceSet",
    "RoundLog",
    "SimulatedHuman",
    "beta_cdf",
    "beta_quantile",
    "brute_force_matching",
    "complete_matching",
    "confidence_score",
    "empirical_regret",
    "greedy_human",
    "load_records",
    "matching_utility",
    "noisy_greedy_human",
    "replay_human",
    "residual",
    "reward",
    "run_ucb1",
    "sample_instance",
    "sample_outcome",
    "save_records",
    "select_arm",
    "solve_imperfect_matching",
    "stratify_participants",
    "success_probability",
    "truncated_human",
]
