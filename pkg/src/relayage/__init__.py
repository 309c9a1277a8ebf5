"""Scheduling for two-hop status updates under a forwarding-rate budget.

A relay sits between a sampling source and a destination, both links
Bernoulli. Each slot it either receives a fresher sample or forwards what
it holds. The package provides the constrained-optimal policy (mixture of
two switching-type policies found by Lagrangian bisection), closed-form
analysis of double-threshold relay policies, an independent truncated
Markov-chain oracle, and a Monte Carlo simulator.
"""

from .cmdp import BracketingError, cmdp_solve
from .dtr import (
    AoiValue,
    CaseFlag,
    ClosedFormDistribution,
    DtrThresholds,
    NoFeasibleThresholds,
    SpecialCase,
    case_flag,
    dtr_action,
    dtr_avg_aoi,
    dtr_avg_aoi_exact,
    dtr_avg_aoi_special,
    dtr_forwarding_rate,
    dtr_policy,
    normalization_x,
    optimize_thresholds,
    stationary_prob,
    subspace_aoi_terms,
)
from .markov import StationaryError, policy_long_run_metrics, stationary_distribution, transition_matrix
from .model import (
    Action,
    LinkParams,
    ResourceBudget,
    SystemState,
    TruncatedStateSpace,
    destination_age,
    is_valid_state,
    step,
    transition_distribution,
)
from .oracle import (
    OracleReport,
    RecurrenceViolation,
    TruncatedChain,
    build_chain,
    power_iteration,
    solve_stationary,
    verify_lemma_recurrences,
)
from .policies import DeterministicPolicy, MixedPolicy, verify_switching_structure
from .rvi import RviConfig, RviSolution, lagrangian_cost, rvi_solve
from .sim import SimConfig, SimResult, simulate, simulate_mixed

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AoiValue",
    "BracketingError",
    "CaseFlag",
    "ClosedFormDistribution",
    "DeterministicPolicy",
    "DtrThresholds",
    "LinkParams",
    "MixedPolicy",
    "NoFeasibleThresholds",
    "OracleReport",
    "RecurrenceViolation",
    "ResourceBudget",
    "RviConfig",
    "RviSolution",
    "SimConfig",
    "SimResult",
    "SpecialCase",
    "StationaryError",
    "SystemState",
    "TruncatedChain",
    "TruncatedStateSpace",
    "build_chain",
    "case_flag",
    "cmdp_solve",
    "destination_age",
    "dtr_action",
    "dtr_avg_aoi",
    "dtr_avg_aoi_exact",
    "dtr_avg_aoi_special",
    "dtr_forwarding_rate",
    "dtr_policy",
    "is_valid_state",
    "lagrangian_cost",
    "normalization_x",
    "optimize_thresholds",
    "policy_long_run_metrics",
    "power_iteration",
    "rvi_solve",
    "simulate",
    "simulate_mixed",
    "solve_stationary",
    "stationary_distribution",
    "stationary_prob",
    "step",
    "subspace_aoi_terms",
    "transition_distribution",
    "transition_matrix",
    "verify_lemma_recurrences",
    "verify_switching_structure",
]
