"""Independent-cascade diffusion: Monte Carlo estimation, exact enumeration
oracles, the attendance-extended objective, and multilinear-extension
gradients.

With one propagation probability for every edge, running the cascade is
distribution-equal to percolation: sample each undirected edge once up front
("live" edges) and count the nodes whose component contains a seed. All the
estimators here sample whole live-edge worlds in batches so that many seed
configurations can be scored against shared randomness; the exact oracles
enumerate every edge subset and integrate attendance in closed form per
component.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .netgraph import Graph

DEFAULT_SAMPLES = 10_000
EDGE_ENUM_LIMIT = 20
INVITED_ENUM_LIMIT = 12

# keep per-chunk label matrices around a few MB
_CHUNK_CELLS = 1 << 22


def _check_prob(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name}={value} outside [0, 1]")
    return float(value)


def _node_array(g: Graph, nodes: Iterable[int], name: str) -> np.ndarray:
    arr = np.array(sorted(set(int(v) for v in nodes)), dtype=np.int64)
    if arr.size and (arr[0] < 0 or arr[-1] >= g.n):
        raise ValueError(f"{name} contains indices outside the roster")
    return arr


@dataclass(frozen=True)
class SpreadEstimate:
    """Monte Carlo spread estimate with its standard error."""

    mean: float
    stderr: float
    samples: int


def simulate_once(g: Graph, seeds: Iterable[int], p: float, rng: np.random.Generator) -> set[int]:
    """One cascade realization.

    Newly activated nodes each attempt every incident neighbor once; an
    attempt toward an already-active node is moot and consumes no
    randomness. Runs in rounds until no new activations.
    """
    _check_prob(p, "p")
    seed_list = _node_array(g, seeds, "seeds")
    active = bytearray(g.n)
    for s in seed_list:
        active[s] = 1
    result = [int(s) for s in seed_list]
    frontier = result
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.neighbors(u):
                if not active[v] and rng.random() < p:
                    active[v] = 1
                    nxt.append(v)
        result.extend(nxt)
        frontier = nxt
    return set(result)


def sample_labels(g: Graph, p: float, batch: int, rng: np.random.Generator) -> np.ndarray:
    """Component labels for `batch` independent live-edge worlds."""
    present = rng.random((batch, g.num_edges), dtype=np.float32) < p
    return _kernels.percolation_labels(g.n, g.edge_u, g.edge_v, present)


def _chunks(total: int, n: int) -> Iterable[int]:
    chunk = max(1, min(total, _CHUNK_CELLS // max(n, 1)))
    done = 0
    while done < total:
        step = min(chunk, total - done)
        yield step
        done += step


def _summarize(total: float, total_sq: float, samples: int) -> SpreadEstimate:
    mean = total / samples
    if samples > 1:
        var = max(0.0, (total_sq - samples * mean * mean) / (samples - 1))
        stderr = float(np.sqrt(var / samples))
    else:
        stderr = 0.0
    return SpreadEstimate(float(mean), stderr, samples)


def estimate_spread(
    g: Graph,
    seeds: Iterable[int],
    p: float,
    samples: int = DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
) -> SpreadEstimate:
    """Sample mean and stderr of the cascade size over independent worlds."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    _check_prob(p, "p")
    seed_arr = _node_array(g, seeds, "seeds")
    total = total_sq = 0.0
    for b in _chunks(samples, g.n):
        labels = sample_labels(g, p, b, rng)
        vals = _kernels.spread_fixed_seeds(labels, seed_arr)
        total += vals.sum()
        total_sq += (vals * vals).sum()
    return _summarize(total, total_sq, samples)


def estimate_spread_attendance(
    g: Graph,
    invited: Iterable[int],
    committed: Iterable[int],
    p: float,
    q: float,
    samples: int = DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
) -> SpreadEstimate:
    """Monte Carlo analogue of exact_spread_attendance: per sample, each
    invited node attends with probability q, then one cascade runs from the
    attendees plus the committed set."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    _check_prob(p, "p")
    _check_prob(q, "q")
    inv = _node_array(g, invited, "invited")
    com = _node_array(g, committed, "committed")
    if np.intersect1d(inv, com).size:
        raise ValueError("invited and committed overlap")
    total = total_sq = 0.0
    for b in _chunks(samples, g.n):
        labels = sample_labels(g, p, b, rng)
        attend = rng.random((b, inv.size)) < q
        vals = _kernels.spread_attendance(labels, inv, attend, com)
        total += vals.sum()
        total_sq += (vals * vals).sum()
    return _summarize(total, total_sq, samples)


def _mask_weights(num_edges: int, p: float) -> np.ndarray:
    m = np.arange(num_edges + 1, dtype=np.float64)
    return np.power(p, m) * np.power(1.0 - p, num_edges - m)


def _require_enum(g: Graph, limit: int = EDGE_ENUM_LIMIT) -> None:
    if g.num_edges > limit:
        raise ValueError(
            f"graph has {g.num_edges} edges, over the enumeration limit "
            f"{limit}; use the Monte Carlo estimators"
        )


def _exact_members(g: Graph, members: Sequence[int], survival: Sequence[float]) -> np.ndarray:
    """Popcount-aggregated conditional values over all edge subsets."""
    mem = np.array(members, dtype=np.int64)
    surv = np.array(survival, dtype=np.float64)
    keep = surv < 1.0
    acc = np.zeros(g.num_edges + 1, dtype=np.float64)
    return _kernels.exact_sweep(g.n, g.edge_u, g.edge_v, mem[keep], surv[keep], acc)


def exact_spread(
    g: Graph, seeds: Iterable[int], p: float, edge_limit: int = EDGE_ENUM_LIMIT
) -> float:
    """Exact expected cascade size by enumerating all 2^|E| edge subsets."""
    _check_prob(p, "p")
    _require_enum(g, edge_limit)
    seed_arr = _node_array(g, seeds, "seeds")
    if seed_arr.size == 0:
        return 0.0
    acc = _exact_members(g, seed_arr, np.zeros(seed_arr.size))
    return float(acc @ _mask_weights(g.num_edges, p))


def exact_spread_attendance(
    g: Graph,
    invited: Iterable[int],
    committed: Iterable[int],
    p: float,
    q: float,
    edge_limit: int = EDGE_ENUM_LIMIT,
) -> float:
    """Exact attendance-extended objective.

    Each invited node seeds with probability q, committed nodes seed
    certainly; per edge subset the attendance expectation factorizes over
    components, so one enumeration pass suffices.
    """
    _check_prob(p, "p")
    _check_prob(q, "q")
    _require_enum(g, edge_limit)
    inv = _node_array(g, invited, "invited")
    com = _node_array(g, committed, "committed")
    if np.intersect1d(inv, com).size:
        raise ValueError("invited and committed overlap")
    if inv.size > INVITED_ENUM_LIMIT:
        raise ValueError(
            f"{inv.size} invited nodes over the enumeration limit {INVITED_ENUM_LIMIT}"
        )
    members = np.concatenate([com, inv])
    survival = np.concatenate([np.zeros(com.size), np.full(inv.size, 1.0 - q)])
    if members.size == 0:
        return 0.0
    acc = _exact_members(g, members, survival)
    return float(acc @ _mask_weights(g.num_edges, p))


def exact_multilinear(
    g: Graph,
    eligible: Sequence[int],
    x: Sequence[float],
    p: float,
    q: float,
    committed: Iterable[int] = (),
    edge_limit: int = EDGE_ENUM_LIMIT,
) -> float:
    """Exact multilinear extension: node eligible[j] is invited independently
    with probability x[j], attends with probability q; committed always seed."""
    _check_prob(p, "p")
    _check_prob(q, "q")
    _require_enum(g, edge_limit)
    el = np.asarray(eligible, dtype=np.int64)
    xv = np.asarray(x, dtype=np.float64)
    com = _node_array(g, committed, "committed")
    members = np.concatenate([com, el])
    survival = np.concatenate([np.zeros(com.size), 1.0 - q * xv])
    if members.size == 0:
        return 0.0
    acc = _exact_members(g, members, survival)
    return float(acc @ _mask_weights(g.num_edges, p))


def subset_value_table(
    g: Graph,
    invited_sets: Sequence[Sequence[int]],
    committed: Iterable[int],
    q: float,
    edge_limit: int = EDGE_ENUM_LIMIT,
) -> np.ndarray:
    """Popcount-aggregated exact values for many invited sets in one
    enumeration pass; combine a row with `_mask_weights(E, p)` (see
    exact_values_from_table) to evaluate any p."""
    _check_prob(q, "q")
    _require_enum(g, edge_limit)
    com = _node_array(g, committed, "committed")
    kmax = com.size + max((len(s) for s in invited_sets), default=0)
    S = len(invited_sets)
    members = np.full((S, max(kmax, 1)), -1, dtype=np.int64)
    survival = np.ones((S, max(kmax, 1)), dtype=np.float64)
    sizes = np.zeros(S, dtype=np.int64)
    for si, inv in enumerate(invited_sets):
        row = list(com) + sorted(set(int(v) for v in inv))
        if len(row) != com.size + len(set(inv)):
            raise ValueError("invited set overlaps committed")
        members[si, : len(row)] = row
        survival[si, : com.size] = 0.0
        survival[si, com.size : len(row)] = 1.0 - q
        sizes[si] = len(row)
    acc = np.zeros((S, g.num_edges + 1), dtype=np.float64)
    return _kernels.exact_sweep_sets(g.n, g.edge_u, g.edge_v, members, survival, sizes, acc)


def exact_values_from_table(table: np.ndarray, p: float) -> np.ndarray:
    return table @ _mask_weights(table.shape[1] - 1, p)


def grad_multilinear(
    g: Graph,
    x,
    p: float,
    q: float,
    committed: Iterable[int] = (),
    samples: int = DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
    with_stderr: bool = False,
):
    """Unbiased estimate of the multilinear-extension gradient.

    x carries `eligible` (node indices) and `values` (inclusion
    probabilities). Per sample one live-edge world, one seed draw S ~ x and
    one attendance coin per eligible node are shared across coordinates; the
    coordinate-i sample is spread(S u {i}) - spread(S \\ {i}) in that world.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    _check_prob(p, "p")
    _check_prob(q, "q")
    eligible = np.asarray(x.eligible, dtype=np.int64)
    values = np.asarray(x.values, dtype=np.float64)
    com = _node_array(g, committed, "committed")
    sum_g = np.zeros(eligible.size)
    sum_sq = np.zeros(eligible.size)
    for b in _chunks(samples, g.n):
        labels = sample_labels(g, p, b, rng)
        select = rng.random((b, eligible.size)) < values
        attend = rng.random((b, eligible.size)) < q
        part, part_sq = _kernels.gradient_accumulate(labels, eligible, com, select, attend)
        sum_g += part
        sum_sq += part_sq
    mean = sum_g / samples
    if not with_stderr:
        return mean
    if samples > 1:
        var = np.maximum(0.0, (sum_sq - samples * mean * mean) / (samples - 1))
        stderr = np.sqrt(var / samples)
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr


def estimate_fractional_value(
    g: Graph,
    eligible: Sequence[int],
    x: Sequence[float],
    p: float,
    q: float,
    committed: Iterable[int] = (),
    samples: int = 256,
    rng: np.random.Generator | None = None,
) -> SpreadEstimate:
    """Monte Carlo estimate of the multilinear extension itself; seed and
    attendance randomness are integrated per world, so only edge randomness
    contributes variance."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    _check_prob(p, "p")
    _check_prob(q, "q")
    survival = np.ones(g.n, dtype=np.float64)
    el = np.asarray(eligible, dtype=np.int64)
    survival[el] = 1.0 - q * np.asarray(x, dtype=np.float64)
    com = _node_array(g, committed, "committed")
    survival[com] = 0.0
    total = total_sq = 0.0
    for b in _chunks(samples, g.n):
        labels = sample_labels(g, p, b, rng)
        vals = _kernels.fractional_value(labels, survival)
        total += vals.sum()
        total_sq += (vals * vals).sum()
    return _summarize(total, total_sq, samples)


def singleton_spread_values(
    g: Graph,
    candidates: Sequence[int],
    committed: Iterable[int],
    p: float,
    q: float,
    samples: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Attendance-weighted value of inviting each candidate alone on top of
    the committed set, all scored against shared worlds. Returns (means,
    stderrs) aligned with `candidates`."""
    cand = np.asarray(candidates, dtype=np.int64)
    com = _node_array(g, committed, "committed")
    _check_prob(p, "p")
    _check_prob(q, "q")
    sum_v = np.zeros(cand.size)
    sum_sq = np.zeros(cand.size)
    for b in _chunks(samples, g.n):
        labels = sample_labels(g, p, b, rng)
        part, part_sq = _kernels.singleton_values(labels, cand, com, q)
        sum_v += part
        sum_sq += part_sq
    mean = sum_v / samples
    if samples > 1:
        var = np.maximum(0.0, (sum_sq - samples * mean * mean) / (samples - 1))
        stderr = np.sqrt(var / samples)
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr
