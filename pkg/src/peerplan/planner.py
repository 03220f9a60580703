"""Multi-stage adaptive peer-leader recruitment.

Each stage re-optimizes (or refills, for the baselines) the invitation set
conditioned on everyone who already attended, records who actually shows up,
and keeps a line-delimited event trace with logical timestamps so a run is
reproducible byte for byte from its seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import ceil
from typing import Iterable, Mapping

import numpy as np

from . import cascade, events, robust, sampler
from .greedy import OptCache
from .netgraph import Graph, ObservedNetwork
from .rng import stream_label, substream

STRATEGIES = ("change", "dc", "random")


@dataclass(frozen=True)
class InterventionConfig:
    """Everything a run needs: stage capacities, uncertainty model, budgets.

    stage_budgets holds k_1..k_T. The scenario grid doubles as the default
    evaluation grid for the final spread report.
    """

    stage_budgets: tuple[int, ...]
    query_budget: int
    strategy: str = "change"
    q: float = 0.5
    scenarios: robust.UncertaintySet = field(
        default_factory=robust.default_uncertainty_set
    )
    seed: int = 0
    solver_iters: int = robust.DEFAULT_ITERS
    samples_per_iter: int = robust.DEFAULT_SAMPLES_PER_ITER
    loss_samples: int = 32
    num_candidate_sets: int = robust.DEFAULT_CANDIDATE_SETS
    eval_samples: int = cascade.DEFAULT_SAMPLES
    opt_samples: int = cascade.DEFAULT_SAMPLES
    final_eval_samples: int = cascade.DEFAULT_SAMPLES
    eval_grid: tuple[float, ...] | None = None
    reinvite_no_shows: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if len(self.stage_budgets) < 1:
            raise ValueError("need at least one stage")
        if any(k < 1 for k in self.stage_budgets):
            raise ValueError("every stage budget must be >= 1")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q={self.q} outside [0, 1]")
        if self.query_budget < 0:
            raise ValueError("query budget must be >= 0")

    @property
    def num_stages(self) -> int:
        return len(self.stage_budgets)

    @property
    def total_invites(self) -> int:
        return sum(self.stage_budgets)

    def evaluation_grid(self) -> tuple[float, ...]:
        return self.eval_grid if self.eval_grid is not None else tuple(self.scenarios)


def default_config(n: int, strategy: str = "change", seed: int = 0, **overrides) -> InterventionConfig:
    """Deployment-shaped defaults: train ~15% of the roster across three
    near-equal stages, query ~20% of it."""
    if n < 1:
        raise ValueError("roster size must be >= 1")
    total = ceil(0.15 * n)
    stages = min(3, total) if total else 1
    base, rem = divmod(total, stages)
    budgets = tuple(base + (1 if i < rem else 0) for i in range(stages))
    assert sum(budgets) == ceil(0.15 * n)
    assert max(budgets) - min(budgets) <= 1
    config = InterventionConfig(
        stage_budgets=budgets,
        query_budget=sampler.default_query_budget(n),
        strategy=strategy,
        seed=seed,
    )
    if overrides:
        config = replace(config, **overrides)
    if config.total_invites > n:
        raise ValueError("stage budgets exceed roster size")
    return config


@dataclass(frozen=True)
class InterventionState:
    """Progress of one intervention: next stage to plan is `stage` (1-based);
    `pending` holds invitations whose attendance is not yet recorded."""

    observed: ObservedNetwork
    stage: int = 1
    committed_stages: tuple[frozenset[int], ...] = ()
    invited_stages: tuple[frozenset[int], ...] = ()
    pending: frozenset[int] = frozenset()
    events: tuple[dict, ...] = ()

    def __post_init__(self):
        seen: set[int] = set()
        for s in self.committed_stages:
            if s & seen:
                raise ValueError("committed sets overlap across stages")
            seen |= s
        if seen & self.pending:
            raise ValueError("pending invitation for an already-committed node")

    @property
    def committed(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.committed_stages:
            out |= s
        return frozenset(out)

    @property
    def no_shows(self) -> frozenset[int]:
        invited: set[int] = set()
        for s in self.invited_stages:
            invited |= s
        return frozenset(invited - self.committed)

    def log(self, kind: str, **fields) -> "InterventionState":
        event = events.make_event(kind, len(self.events), **fields)
        return replace(self, events=self.events + (event,))


def initial_state(observed: ObservedNetwork) -> InterventionState:
    return InterventionState(observed)


@dataclass(frozen=True)
class PlanResult:
    state: InterventionState
    invited: frozenset[int]
    status: str  # "ok" | "short" | "empty-pool"
    diagnostics: dict = field(default_factory=dict)


def _eligible_pool(state: InterventionState, config: InterventionConfig) -> list[int]:
    blocked = set(state.committed)
    if not config.reinvite_no_shows:
        blocked |= state.no_shows
    return [v for v in range(len(state.observed.roster)) if v not in blocked]


def plan_stage(
    state: InterventionState,
    config: InterventionConfig,
    rng: np.random.Generator,
    stream: str = "plan",
) -> PlanResult:
    """Choose the invitation set for the current stage.

    change: robust saddle-point solve plus rounding on the observed subgraph,
    conditioned on all prior attendees. dc: next-highest-degree unrecruited
    nodes. random: uniform draw from the unrecruited pool.
    """
    if state.stage > config.num_stages:
        raise ValueError(f"all {config.num_stages} stages already planned")
    if state.pending:
        raise ValueError("previous stage has unresolved invitations")
    pool = _eligible_pool(state, config)
    k_t = config.stage_budgets[state.stage - 1]
    k_eff = min(k_t, len(pool))
    diagnostics: dict = {}
    if k_eff == 0:
        invited: frozenset[int] = frozenset()
    elif config.strategy == "change":
        g_obs = state.observed.observed_subgraph()
        committed = state.committed
        opt_cache = OptCache(
            g_obs, k_eff, config.q,
            eval_samples=config.opt_samples,
            master_seed=config.seed,
        )
        frac = robust.solve_robust(
            g_obs, k_eff, config.scenarios, config.q, committed,
            iters=config.solver_iters,
            samples_per_iter=config.samples_per_iter,
            rng=rng, opt_cache=opt_cache, eligible=pool,
            loss_samples=config.loss_samples,
        )
        solution = robust.sample_best(
            g_obs, frac.x, k_eff, config.scenarios, config.q, committed,
            num_candidate_sets=config.num_candidate_sets,
            eval_samples=config.eval_samples,
            rng=rng, opt_cache=opt_cache, weights_trace=frac.weights_trace,
        )
        invited = frozenset(solution.selected)
        diagnostics["solution"] = solution
        diagnostics["fractional"] = frac
    elif config.strategy == "dc":
        g_obs = state.observed.observed_subgraph()
        deg = g_obs.degrees()
        # same (-degree, index) ranking as top_k_by_degree, minus the recruited
        order = sorted(range(g_obs.n), key=lambda u: (-deg[u], u))
        pool_set = set(pool)
        invited = frozenset([v for v in order if v in pool_set][:k_eff])
    else:  # random
        picks = rng.choice(len(pool), size=k_eff, replace=False)
        invited = frozenset(pool[i] for i in sorted(int(i) for i in picks))
    status = "ok" if len(invited) == k_t else ("empty-pool" if not invited else "short")
    return PlanResult(apply_invitation(state, invited, status, stream), invited, status, diagnostics)


def apply_invitation(
    state: InterventionState,
    invited: frozenset[int],
    status: str,
    stream: str = "plan",
) -> InterventionState:
    """Fold an already-chosen invitation set into the state.

    The pure half of plan_stage, split out so a recorded run can be
    reconstructed from its event log without re-running any solver.
    """
    roster = state.observed.roster
    return replace(state, pending=invited).log(
        "invitation",
        stage=state.stage,
        invited=sorted(roster.token_of(v) for v in invited),
        status=status,
        stream=stream,
    )


def record_attendance(state: InterventionState, attended: Iterable[int]) -> InterventionState:
    """Close out the current stage: attendees become committed, no-shows
    return to the pool, the stage counter advances."""
    attended_set = frozenset(int(v) for v in attended)
    stray = attended_set - state.pending
    if stray:
        raise ValueError(f"attendance for nodes never invited this stage: {sorted(stray)}")
    roster = state.observed.roster
    new_state = replace(
        state,
        stage=state.stage + 1,
        committed_stages=state.committed_stages + (attended_set,),
        invited_stages=state.invited_stages + (state.pending,),
        pending=frozenset(),
    )
    new_state = new_state.log(
        "attendance",
        stage=state.stage,
        attended=sorted(roster.token_of(v) for v in attended_set),
    )
    return new_state.log("stage-advance", stage=new_state.stage)


@dataclass(frozen=True)
class InterventionResult:
    """Full run record: final state (with event trace), per-stage sets, and
    the ground-truth spread of the final committed set across the grid."""

    config: InterventionConfig
    state: InterventionState
    evaluations: Mapping[float, cascade.SpreadEstimate]

    @property
    def committed(self) -> frozenset[int]:
        return self.state.committed

    def trace_jsonl(self) -> str:
        return events.to_jsonl(self.state.events)


def _surveyed_network(g: Graph) -> ObservedNetwork:
    # a full survey: every node queried, every edge revealed
    return ObservedNetwork(
        g.roster, frozenset(range(g.n)), frozenset(g.edges)
    )


def _run_sampling_phase(
    g: Graph, config: InterventionConfig, state: InterventionState
) -> InterventionState:
    label = stream_label(config.seed, "sample")
    rng = substream(config.seed, "sample")
    session = sampler.new_session(g.roster, min(config.query_budget, g.n))
    while not session.exhausted:
        target = sampler.next_query(session, rng)
        phase = session.phase
        neighbors = sorted(g.roster.token_of(v) for v in g.neighbors(target))
        session = sampler.record(session, target, neighbors)
        state = state.log(
            "query",
            node=g.roster.token_of(target),
            phase=phase,
            stream=label,
        )
        state = state.log(
            "query-result", node=g.roster.token_of(target), neighbors=neighbors
        )
    return replace(state, observed=session.observed)


def simulate_intervention(
    g: Graph, config: InterventionConfig, rng: np.random.Generator | None = None
) -> InterventionResult:
    """In-silico end-to-end run against a known graph.

    Network discovery (change only; dc plans on a full survey, random needs
    none), then plan/attend cycles with Bernoulli(q) attendance, then spread
    evaluation of the final committed set on the truth across the grid. All
    randomness flows from named substreams of config.seed unless an explicit
    rng is supplied for the planning steps.
    """
    if config.total_invites > g.n:
        raise ValueError("stage budgets exceed roster size")
    if config.strategy == "dc":
        observed = _surveyed_network(g)
    else:
        observed = ObservedNetwork(g.roster)
    state = initial_state(observed).log(
        "session-created",
        strategy=config.strategy,
        stages=list(config.stage_budgets),
        q=config.q,
        seed=config.seed,
    )
    if config.strategy == "change":
        state = _run_sampling_phase(g, config, state)
    for t in range(1, config.num_stages + 1):
        stage_rng = rng if rng is not None else substream(config.seed, "plan", t)
        result = plan_stage(
            state, config, stage_rng, stream=stream_label(config.seed, "plan", t)
        )
        state = result.state
        attend_rng = substream(config.seed, "attend", t)
        attended = [v for v in sorted(result.invited) if attend_rng.random() < config.q]
        state = record_attendance(state, attended)
    final = sorted(state.committed)
    evaluations = {}
    for p in config.evaluation_grid():
        eval_rng = substream(config.seed, "eval", repr(float(p)))
        evaluations[float(p)] = cascade.estimate_spread(
            g, final, p, config.final_eval_samples, eval_rng
        )
    return InterventionResult(config, state, evaluations)
