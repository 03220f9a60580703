"""Budgeted two-phase network discovery.

Queries alternate strictly: odd queries pick a uniformly random unqueried
roster member, even queries pick a uniformly random unqueried revealed
neighbor of the respondent just interviewed. Random neighbors land on
high-degree nodes disproportionately often, so the second phase finds the
well-connected people a uniform sample would miss.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .netgraph import Graph, ObservedNetwork, Roster


@dataclass(frozen=True)
class QuerySession:
    """State of one interview campaign. `phase` is the phase of the NEXT
    query (1 or 2); `last_primary` is the most recent phase-1 respondent."""

    observed: ObservedNetwork
    budget: int
    issued: int = 0
    phase: int = 1
    last_primary: int | None = None

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.issued > self.budget:
            raise ValueError("issued queries exceed budget")
        if self.phase not in (1, 2):
            raise ValueError("phase must be 1 or 2")

    @property
    def exhausted(self) -> bool:
        return self.issued >= self.budget or not self.observed.unqueried()


def new_session(roster: Roster, budget: int) -> QuerySession:
    return QuerySession(ObservedNetwork(roster), budget)


def next_query(session: QuerySession, rng: np.random.Generator) -> int:
    """Choose whom to interview next.

    Phase 2 restricts to unqueried revealed neighbors of the last phase-1
    respondent; when none exist (isolated respondent, or all neighbors
    already queried) it falls back to a uniform unqueried pick rather than
    wasting the query.
    """
    if session.issued >= session.budget:
        raise ValueError(f"query budget {session.budget} exhausted")
    unqueried = session.observed.unqueried()
    if not unqueried:
        raise ValueError("every roster member has been queried")
    if session.phase == 2 and session.last_primary is not None:
        queried = session.observed.queried
        candidates = sorted(
            v
            for v in session.observed.revealed_neighbors(session.last_primary)
            if v not in queried
        )
        if candidates:
            return candidates[int(rng.integers(len(candidates)))]
    return unqueried[int(rng.integers(len(unqueried)))]


def record(
    session: QuerySession, node: int, neighbor_tokens: Iterable[str]
) -> QuerySession:
    """Fold one interview result into the session: reveal the respondent's
    neighborhood (new contact tokens join the roster) and advance the phase."""
    if session.issued >= session.budget:
        raise ValueError(f"query budget {session.budget} exhausted")
    token = session.observed.roster.token_of(node)
    observed = session.observed.reveal(token, neighbor_tokens)
    return replace(
        session,
        observed=observed,
        issued=session.issued + 1,
        phase=2 if session.phase == 1 else 1,
        last_primary=node if session.phase == 1 else session.last_primary,
    )


@dataclass(frozen=True)
class SamplingTrace:
    """run_sampling with per-phase respondent bookkeeping kept."""

    observed: ObservedNetwork
    phase1: tuple[int, ...]
    phase2: tuple[int, ...]


def drive_sampling(g: Graph, M: int, rng: np.random.Generator) -> SamplingTrace:
    """Run a full campaign against a ground-truth graph, answering each query
    with the respondent's true neighborhood."""
    session = new_session(g.roster, min(M, g.n))
    phase1: list[int] = []
    phase2: list[int] = []
    while not session.exhausted:
        target = next_query(session, rng)
        (phase1 if session.phase == 1 else phase2).append(target)
        neighbors = [g.roster.token_of(v) for v in g.neighbors(target)]
        session = record(session, target, neighbors)
    return SamplingTrace(session.observed, tuple(phase1), tuple(phase2))


def run_sampling(g: Graph, M: int, rng: np.random.Generator) -> ObservedNetwork:
    """Two-phase discovery against a simulation oracle; issues exactly
    min(M, n) queries, the extra one on odd budgets being phase 1."""
    return drive_sampling(g, M, rng).observed


def default_query_budget(n: int) -> int:
    # one in five members, rounded up
    return int(np.ceil(0.20 * n))
