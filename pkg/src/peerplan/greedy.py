"""Lazy greedy maximization of the attendance-extended spread for one fixed
propagation probability, plus the memoized single-scenario optimum surrogate
used to normalize scenarios against each other.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

from . import _kernels, cascade
from .netgraph import Graph
from .rng import substream

EXHAUSTIVE_LIMIT = 100_000


@dataclass(frozen=True)
class GreedyResult:
    """Greedy picks in order, with the objective value after each pick.

    `prefix_values[i]` estimates the objective of the first i+1 picks on top
    of the committed set; `base_value` is the committed-only objective.
    status is "ok" or "empty-pool".
    """

    selected: tuple[int, ...]
    prefix_values: tuple[float, ...]
    evaluations: int
    base_value: float = 0.0
    status: str = "ok"

    @property
    def value(self) -> float:
        return self.prefix_values[-1] if self.prefix_values else self.base_value


class MonteCarloObjective:
    """Marginal-gain evaluator backed by fresh live-edge worlds per call.

    Attendance randomness is integrated per world, so every gain sample is
    nonnegative and the prefix values of a greedy run never decrease.
    """

    def __init__(self, g: Graph, p: float, q: float, committed, samples: int,
                 rng: np.random.Generator):
        self.g = g
        self.p = float(p)
        self.q = float(q)
        self.committed = np.array(sorted(set(int(v) for v in committed)), dtype=np.int64)
        self.samples = int(samples)
        self.rng = rng

    def base(self) -> float:
        if self.committed.size == 0:
            return 0.0
        est = cascade.estimate_spread_attendance(
            self.g, (), self.committed, self.p, self.q, self.samples, self.rng
        )
        return est.mean

    def marginals(self, invited: Sequence[int], cands: Sequence[int]):
        inv = np.array(sorted(invited), dtype=np.int64)
        cand = np.asarray(cands, dtype=np.int64)
        sum_g = np.zeros(cand.size)
        sum_sq = np.zeros(cand.size)
        for b in cascade._chunks(self.samples, self.g.n):
            labels = cascade.sample_labels(self.g, self.p, b, self.rng)
            part, part_sq = _kernels.attendance_marginals(
                labels, inv, self.committed, cand, self.q
            )
            sum_g += part
            sum_sq += part_sq
        mean = sum_g / self.samples
        var = np.maximum(0.0, (sum_sq - self.samples * mean * mean) / max(self.samples - 1, 1))
        return mean, np.sqrt(var / self.samples)


class ExactObjective:
    """Enumeration-backed evaluator for oracle-sized graphs.

    The first gain query at a given invited set triggers one shared sweep
    covering every remaining candidate, so repeated lazy re-evaluations in
    the same round cost nothing extra.
    """

    def __init__(self, g: Graph, p: float, q: float, committed,
                 pool: Sequence[int] | None = None,
                 edge_limit: int = cascade.EDGE_ENUM_LIMIT):
        self.g = g
        self.p = float(p)
        self.q = float(q)
        self.committed = sorted(set(int(v) for v in committed))
        self.edge_limit = edge_limit
        if pool is None:
            pool = [v for v in range(g.n) if v not in set(self.committed)]
        self.pool = list(pool)
        self._values: dict[frozenset, float] = {}
        self._primed: set[frozenset] = set()

    def _prime(self, invited: frozenset) -> None:
        if invited in self._primed:
            return
        sets = [sorted(invited)] + [
            sorted(invited | {v}) for v in self.pool if v not in invited
        ]
        table = cascade.subset_value_table(
            self.g, sets, self.committed, self.q, edge_limit=self.edge_limit
        )
        vals = cascade.exact_values_from_table(table, self.p)
        for s, val in zip(sets, vals):
            self._values[frozenset(s)] = float(val)
        self._primed.add(invited)

    def base(self) -> float:
        self._prime(frozenset())
        return self._values[frozenset()]

    def marginals(self, invited: Sequence[int], cands: Sequence[int]):
        key = frozenset(invited)
        self._prime(key)
        current = self._values[key]
        gains = np.array([self._values[key | {v}] - current for v in cands])
        return gains, np.zeros(len(cands))


def lazy_greedy(
    g: Graph,
    k: int,
    p: float,
    q: float,
    committed: Iterable[int] = (),
    eval_samples: int = cascade.DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
    candidates: Sequence[int] | None = None,
    objective=None,
    stale_tol: float = 1.0,
) -> GreedyResult:
    """CELF-style lazy greedy: maintain an upper-bound heap of marginal
    gains, re-evaluate only the top entry against the current picks, accept
    when the fresh gain still beats the next-best bound (minus `stale_tol`
    standard errors when the evaluator is noisy). Ties on gain break by
    ascending node index.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    committed_set = set(int(v) for v in committed)
    if objective is None:
        if rng is None:
            rng = np.random.default_rng()
        objective = MonteCarloObjective(g, p, q, committed_set, eval_samples, rng)
    if candidates is None:
        pool = [v for v in range(g.n) if v not in committed_set]
    else:
        pool = sorted(set(int(v) for v in candidates) - committed_set)
    base = objective.base()
    if not pool:
        return GreedyResult((), (), 0, base, status="empty-pool")
    if k == 0:
        return GreedyResult((), (), 0, base)

    gains, errs = objective.marginals((), pool)
    evals = len(pool)
    # heap entries: (-gain, node, size of the pick set the gain was scored at)
    heap = [(-float(gains[i]), v, 0) for i, v in enumerate(pool)]
    heapq.heapify(heap)
    selected: list[int] = []
    prefix: list[float] = []
    running = base
    while len(selected) < k and heap:
        neg_gain, v, scored_at = heapq.heappop(heap)
        if scored_at == len(selected):
            selected.append(v)
            running += -neg_gain
            prefix.append(running)
            continue
        fresh, err = objective.marginals(tuple(selected), [v])
        evals += 1
        gain = float(fresh[0])
        next_bound = -heap[0][0] if heap else -np.inf
        if gain > next_bound - stale_tol * float(err[0]):
            selected.append(v)
            running += gain
            prefix.append(running)
        else:
            heapq.heappush(heap, (-gain, v, len(selected)))
    return GreedyResult(tuple(selected), tuple(prefix), evals, base)


@dataclass
class OptCache:
    """Memo of single-scenario optimum surrogates for a fixed (graph, k, q).

    Keyed by (p, committed set). `exact=True` switches the surrogate from
    the greedy value to true enumeration (test and small-instance use).
    """

    g: Graph
    k: int
    q: float
    eval_samples: int = cascade.DEFAULT_SAMPLES
    master_seed: int = 0
    exact: bool = False
    edge_limit: int = cascade.EDGE_ENUM_LIMIT
    values: dict = field(default_factory=dict)

    def prime(self, p: float, committed: Iterable[int], value: float) -> None:
        self.values[(float(p), frozenset(committed))] = float(value)


def opt_estimate(
    g: Graph,
    k: int,
    p: float,
    q: float,
    committed: Iterable[int] = (),
    cache: OptCache | None = None,
) -> float:
    """Best achievable objective for scenario p (surrogate: greedy value, or
    enumeration when the cache is exact). Memoized per (p, committed)."""
    if cache is None:
        cache = OptCache(g, k, q)
    if (g, k, q) != (cache.g, cache.k, cache.q):
        raise ValueError("cache was built for a different (graph, k, q) context")
    key = (float(p), frozenset(int(v) for v in committed))
    if key in cache.values:
        return cache.values[key]
    if cache.exact:
        _, val = exhaustive_opt(g, k, p, q, key[1], edge_limit=cache.edge_limit)
    else:
        rng = substream(cache.master_seed, "opt", repr(float(p)), *sorted(key[1]))
        val = lazy_greedy(g, k, p, q, key[1], cache.eval_samples, rng).value
    cache.values[key] = float(val)
    return cache.values[key]


def exhaustive_opt(
    g: Graph,
    k: int,
    p: float,
    q: float,
    committed: Iterable[int] = (),
    edge_limit: int = cascade.EDGE_ENUM_LIMIT,
) -> tuple[set[int], float]:
    """True optimum invited set by enumerating every size-k candidate subset
    with the exact objective. Monotonicity makes a full-size set optimal, so
    only exact-size subsets are scored; ties go to the lexicographically
    smallest. Intended as a test oracle on small instances.
    """
    committed_set = set(int(v) for v in committed)
    pool = [v for v in range(g.n) if v not in committed_set]
    if not 0 <= k <= len(pool):
        raise ValueError(f"k={k} outside [0, {len(pool)}]")
    if comb(len(pool), k) > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"C({len(pool)}, {k}) over the enumeration limit {EXHAUSTIVE_LIMIT}"
        )
    if k == 0:
        return set(), cascade.exact_spread_attendance(
            g, (), committed_set, p, q, edge_limit=edge_limit
        )
    best_set: tuple[int, ...] = ()
    best_val = -1.0
    combos = list(combinations(pool, k))
    chunk = 2048
    for lo in range(0, len(combos), chunk):
        batch = combos[lo : lo + chunk]
        table = cascade.subset_value_table(
            g, batch, committed_set, q, edge_limit=edge_limit
        )
        vals = cascade.exact_values_from_table(table, p)
        for s, val in zip(batch, vals):
            if val > best_val + 1e-12:
                best_set, best_val = s, float(val)
    return set(best_set), best_val
