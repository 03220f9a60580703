"""Peer-leader intervention planning toolkit.

Core objects are re-exported here; the HTTP layer lives in
:mod:`peerplan.service` and is imported lazily by the CLI so that the
numerical modules work without the web dependencies installed.
"""

from .netgraph import (
    Graph,
    ObservedNetwork,
    ParseError,
    Roster,
    load_edge_list,
    observed_subgraph,
    reveal,
    serialize_edge_list,
    top_k_by_degree,
)
from .cascade import (
    SpreadEstimate,
    estimate_spread,
    estimate_spread_attendance,
    exact_multilinear,
    exact_spread,
    exact_spread_attendance,
    grad_multilinear,
    simulate_once,
    subset_value_table,
)
from .greedy import ExactObjective, MonteCarloObjective, exhaustive_opt, lazy_greedy
from .robust import (
    MarginalVector,
    RobustSolution,
    UncertaintySet,
    make_uncertainty_set,
    sample_best,
    solve_robust,
    swap_round,
)
from .sampler import QuerySession, drive_sampling, new_session, next_query, record, run_sampling
from .planner import (
    InterventionConfig,
    InterventionResult,
    InterventionState,
    default_config,
    plan_stage,
    record_attendance,
    simulate_intervention,
)
from .harness import ExperimentSpec, generate_graph, load_experiment_spec, run_experiment
from .rng import substream

__version__ = "0.1.0"

__all__ = [
    "ExactObjective",
    "ExperimentSpec",
    "Graph",
    "InterventionConfig",
    "InterventionResult",
    "InterventionState",
    "MarginalVector",
    "MonteCarloObjective",
    "ObservedNetwork",
    "ParseError",
    "QuerySession",
    "RobustSolution",
    "Roster",
    "SpreadEstimate",
    "UncertaintySet",
    "default_config",
    "drive_sampling",
    "estimate_spread",
    "estimate_spread_attendance",
    "exact_multilinear",
    "exact_spread",
    "exact_spread_attendance",
    "exhaustive_opt",
    "generate_graph",
    "grad_multilinear",
    "lazy_greedy",
    "load_edge_list",
    "load_experiment_spec",
    "make_uncertainty_set",
    "new_session",
    "next_query",
    "observed_subgraph",
    "plan_stage",
    "record",
    "record_attendance",
    "reveal",
    "run_experiment",
    "run_sampling",
    "sample_best",
    "serialize_edge_list",
    "simulate_intervention",
    "simulate_once",
    "solve_robust",
    "subset_value_table",
    "substream",
    "swap_round",
    "top_k_by_degree",
]
