"""Max-min seed selection over an uncertainty set of propagation
probabilities.

The discrete max-min problem is relaxed to marginal inclusion probabilities;
an adversary keeps a mixed strategy over scenarios by multiplicative weights
while the maximizer runs projected stochastic gradient ascent on the
scenario-normalized spread, and the averaged iterate is rounded back to sets
by pairwise swap rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels, cascade
from .greedy import OptCache, opt_estimate
from .netgraph import Graph

DEFAULT_ITERS = 500
DEFAULT_SAMPLES_PER_ITER = 100
DEFAULT_CANDIDATE_SETS = 20
_LOSS_SAMPLES = 32
_FINAL_VALUE_SAMPLES = 512


@dataclass(frozen=True)
class UncertaintySet:
    """Strictly increasing propagation-probability scenarios."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("uncertainty set is empty")
        for v in self.values:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"scenario {v} outside [0, 1]")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("scenarios must be strictly increasing")

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def make_uncertainty_set(lo: float, hi: float, count: int) -> UncertaintySet:
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0.0 <= lo <= hi <= 1.0:
        raise ValueError(f"need 0 <= lo <= hi <= 1, got lo={lo}, hi={hi}")
    if count == 1:
        return UncertaintySet((float(lo),))
    return UncertaintySet(tuple(float(v) for v in np.linspace(lo, hi, count)))


def default_uncertainty_set() -> UncertaintySet:
    # endpoints pulled in from 0 and 1: p=0 normalizes trivially and p=1 is
    # deterministic, neither stresses the adversary
    return make_uncertainty_set(0.05, 0.95, 10)


@dataclass(frozen=True)
class MarginalVector:
    """Fractional selection over the eligible pool: 0 <= x <= 1, sum <= k."""

    eligible: tuple[int, ...]
    values: np.ndarray
    k: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "eligible", tuple(int(v) for v in self.eligible))
        if vals.shape != (len(self.eligible),):
            raise ValueError("values and eligible length mismatch")
        if len(set(self.eligible)) != len(self.eligible):
            raise ValueError("duplicate eligible nodes")
        if vals.size and (vals.min() < -1e-9 or vals.max() > 1 + 1e-9):
            raise ValueError("entries outside [0, 1]")
        if vals.sum() > self.k + 1e-6:
            raise ValueError(f"mass {vals.sum():.6f} exceeds budget {self.k}")

    def as_dict(self) -> dict[int, float]:
        return {v: float(x) for v, x in zip(self.eligible, self.values)}


@dataclass(frozen=True)
class ScenarioWeights:
    """Adversary mixed strategy over the uncertainty set."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if w.min() < 0:
            raise ValueError("negative scenario weight")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()}, not 1")


def project_box_simplex(v: np.ndarray, k: float) -> np.ndarray:
    """Euclidean projection onto {0 <= x <= 1, sum x <= k}.

    Clipping alone either lands inside the budget or the budget is active;
    in the active case the projection is clip(v - lam) with lam chosen by
    bisection so the mass equals k.
    """
    v = np.asarray(v, dtype=np.float64)
    clipped = np.clip(v, 0.0, 1.0)
    if clipped.sum() <= k:
        return clipped
    lo, hi = 0.0, float(v.max())
    for _ in range(80):
        lam = 0.5 * (lo + hi)
        if np.clip(v - lam, 0.0, 1.0).sum() > k:
            lo = lam
        else:
            hi = lam
    return np.clip(v - hi, 0.0, 1.0)


@dataclass(frozen=True)
class FractionalSolution:
    x: MarginalVector
    weights_trace: np.ndarray  # one ScenarioWeights row per iteration
    diagnostics: dict


def _resolve_pool(g: Graph, committed, eligible) -> tuple[list[int], set[int]]:
    committed_set = set(int(v) for v in committed)
    if eligible is None:
        pool = [v for v in range(g.n) if v not in committed_set]
    else:
        pool = sorted(set(int(v) for v in eligible) - committed_set)
    return pool, committed_set


def solve_robust(
    g: Graph,
    k: int,
    U: UncertaintySet,
    q: float,
    committed: Iterable[int] = (),
    iters: int = DEFAULT_ITERS,
    samples_per_iter: int = DEFAULT_SAMPLES_PER_ITER,
    rng: np.random.Generator | None = None,
    opt_cache: OptCache | None = None,
    eligible: Sequence[int] | None = None,
    loss_samples: int = _LOSS_SAMPLES,
) -> FractionalSolution:
    """Saddle-point iteration for the fractional max-min problem.

    Each round: estimate the normalized value of the current x under every
    scenario (the adversary's losses), update the adversary by multiplicative
    weights, then take one projected gradient step under a scenario drawn
    from the fresh weights. Returns the uniform average of the x iterates.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    pool, committed_set = _resolve_pool(g, committed, eligible)
    if len(pool) < k:
        raise ValueError(f"eligible pool ({len(pool)}) smaller than budget k={k}")
    if opt_cache is None:
        opt_cache = OptCache(g, k, q, eval_samples=samples_per_iter * 10)
    opts = np.array([opt_estimate(g, k, p, q, committed_set, opt_cache) for p in U])
    if opts.min() <= 0:
        raise ValueError("scenario optimum is 0; normalization undefined")

    nu = len(U)
    x = np.full(len(pool), min(1.0, k / len(pool)))
    cum_loss = np.zeros(nu)
    eta_adv = np.sqrt(np.log(nu) / iters) if nu > 1 else 0.0
    eta_x = k / np.sqrt(iters)
    trace = np.empty((iters, nu))
    x_sum = np.zeros_like(x)
    avg_payoff = 0.0
    for t in range(iters):
        shifted = -eta_adv * (cum_loss - cum_loss.min())
        w = np.exp(shifted)
        w /= w.sum()
        trace[t] = w
        vals = np.array(
            [
                cascade.estimate_fractional_value(
                    g, pool, x, p, q, committed_set, loss_samples, rng
                ).mean
                for p in U
            ]
        ) / opts
        cum_loss += vals
        avg_payoff += float(w @ vals)
        scenario = int(rng.choice(nu, p=w))
        xa = _XView(pool, x)
        grad = cascade.grad_multilinear(
            g, xa, U[scenario], q, committed_set, samples_per_iter, rng
        ) / opts[scenario]
        x = project_box_simplex(x + eta_x * grad, k)
        x_sum += x
    x_bar = x_sum / iters
    final_vals = np.array(
        [
            cascade.estimate_fractional_value(
                g, pool, x_bar, p, q, committed_set, _FINAL_VALUE_SAMPLES, rng
            ).mean
            for p in U
        ]
    ) / opts
    worst = float(final_vals.min())
    diagnostics = {
        "scenario_values": final_vals,
        "worst_value": worst,
        "gap_estimate": avg_payoff / iters - worst,
        "opts": opts,
    }
    return FractionalSolution(
        MarginalVector(tuple(pool), x_bar, k), trace, diagnostics
    )


class _XView:
    # duck-typed (eligible, values) pair handed to the gradient estimator
    def __init__(self, eligible, values):
        self.eligible = eligible
        self.values = values


def swap_round(x: MarginalVector, rng: np.random.Generator) -> set[int]:
    """Round a marginal vector to a set, preserving each inclusion
    probability exactly.

    Fractional entries are merged pairwise: mass moves from one to the other
    with odds chosen so both marginals survive, and every merge leaves at
    most one of the pair fractional. The final leftover fraction is resolved
    by a Bernoulli draw, so |set| <= ceil(sum x) <= k.
    """
    eps = 1e-12
    vals = np.asarray(x.values, dtype=np.float64).copy()
    chosen = [v for v, xv in zip(x.eligible, vals) if xv >= 1.0 - eps]
    frac = [i for i, xv in enumerate(vals) if eps < xv < 1.0 - eps]
    while len(frac) >= 2:
        ia, ib = frac[-2], frac[-1]
        a, b = vals[ia], vals[ib]
        s = a + b
        if s < 1.0:
            # winner absorbs the loser's mass
            if rng.random() < a / s:
                vals[ia], vals[ib] = s, 0.0
            else:
                vals[ia], vals[ib] = 0.0, s
        else:
            # one saturates, the other keeps the remainder
            if rng.random() < (1.0 - b) / (2.0 - s):
                vals[ia], vals[ib] = 1.0, s - 1.0
            else:
                vals[ia], vals[ib] = s - 1.0, 1.0
        frac = [i for i in frac if eps < vals[i] < 1.0 - eps]
        for i in (ia, ib):
            if vals[i] >= 1.0 - eps:
                chosen.append(x.eligible[i])
    if frac:
        i = frac[0]
        if rng.random() < vals[i]:
            chosen.append(x.eligible[i])
    return set(chosen)


def normalized_value(
    g: Graph,
    invited: Iterable[int],
    p: float,
    q: float,
    committed: Iterable[int],
    opt_cache: OptCache,
    eval_samples: int = cascade.DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
    exact: bool | None = None,
) -> float:
    """Attendance-extended value of the invited set divided by the scenario
    optimum from the shared cache."""
    committed_set = set(int(v) for v in committed)
    opt = opt_estimate(g, opt_cache.k, p, q, committed_set, opt_cache)
    if opt <= 0.0:
        raise ValueError(f"scenario optimum is 0 at p={p}; ratio undefined")
    if exact is None:
        exact = opt_cache.exact
    if exact:
        val = cascade.exact_spread_attendance(
            g, invited, committed_set, p, q, edge_limit=opt_cache.edge_limit
        )
    else:
        if rng is None:
            rng = np.random.default_rng()
        val = cascade.estimate_spread_attendance(
            g, invited, committed_set, p, q, eval_samples, rng
        ).mean
    return float(val / opt)


@dataclass(frozen=True)
class RobustSolution:
    """Chosen set plus the diagnostics of how it fares per scenario."""

    x: MarginalVector
    selected: frozenset[int]
    scenario_values: tuple[float, ...]
    worst_value: float
    worst_scenario: float
    weights_trace: np.ndarray | None = None

    def __post_init__(self):
        if len(self.selected) > self.x.k:
            raise ValueError("selected set exceeds budget")
        if abs(self.worst_value - min(self.scenario_values)) > 1e-9:
            raise ValueError("worst_value is not the scenario minimum")


def sample_best(
    g: Graph,
    x: MarginalVector,
    k: int,
    U: UncertaintySet,
    q: float,
    committed: Iterable[int] = (),
    num_candidate_sets: int = DEFAULT_CANDIDATE_SETS,
    eval_samples: int = cascade.DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
    opt_cache: OptCache | None = None,
    weights_trace: np.ndarray | None = None,
    exact: bool | None = None,
) -> RobustSolution:
    """Draw candidate sets by swap rounding and keep the one whose worst
    scenario-normalized value is largest.

    All candidates are scored against shared live-edge worlds per scenario,
    so comparisons between them are paired.
    """
    if num_candidate_sets < 1:
        raise ValueError("num_candidate_sets must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    committed_set = set(int(v) for v in committed)
    if opt_cache is None:
        opt_cache = OptCache(g, k, q)
    if exact is None:
        exact = opt_cache.exact
    candidates = [frozenset(swap_round(x, rng)) for _ in range(num_candidate_sets)]
    opts = np.array([opt_estimate(g, k, p, q, committed_set, opt_cache) for p in U])
    values = np.empty((len(candidates), len(U)))
    if exact:
        table = cascade.subset_value_table(
            g,
            [sorted(c) for c in candidates],
            committed_set,
            q,
            edge_limit=opt_cache.edge_limit,
        )
        for ui, p in enumerate(U):
            values[:, ui] = cascade.exact_values_from_table(table, p)
    else:
        survivals = np.ones((len(candidates), g.n))
        for ci, c in enumerate(candidates):
            survivals[ci, sorted(c)] = 1.0 - q
            survivals[ci, sorted(committed_set)] = 0.0
        totals = np.zeros(len(candidates))
        for ui, p in enumerate(U):
            totals[:] = 0.0
            done = 0
            for b in cascade._chunks(eval_samples, g.n):
                labels = cascade.sample_labels(g, p, b, rng)
                for ci in range(len(candidates)):
                    totals[ci] += _kernels.fractional_value(labels, survivals[ci]).sum()
                done += b
            values[:, ui] = totals / done
    values /= opts
    worsts = values.min(axis=1)
    best = int(worsts.argmax())
    per_scenario = tuple(float(v) for v in values[best])
    worst_idx = int(values[best].argmin())
    return RobustSolution(
        x,
        candidates[best],
        per_scenario,
        float(values[best].min()),
        float(U[worst_idx]),
        weights_trace,
    )
