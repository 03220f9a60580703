"""Compiled inner loops for live-edge world evaluation.

Everything here works on dense index arrays produced by the public modules.
A "world" is one realization of edge presence; spread questions reduce to
connected-component bookkeeping (union-find with union-by-min-index, so a
component's label is its smallest member).
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        parent[root] = parent[parent[root]]
        root = parent[root]
    return root


@njit(cache=True)
def percolation_labels(n, eu, ev, present):
    """Component labels for a batch of worlds.

    present: (B, E) bool matrix of edge realizations. Returns (B, n) int32
    where labels[b, i] is the smallest node index in i's component.
    """
    B = present.shape[0]
    E = eu.shape[0]
    labels = np.empty((B, n), np.int32)
    parent = np.empty(n, np.int32)
    for b in range(B):
        for i in range(n):
            parent[i] = i
        for e in range(E):
            if present[b, e]:
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru < rv:
                    parent[rv] = ru
                elif rv < ru:
                    parent[ru] = rv
        for i in range(n):
            labels[b, i] = _find(parent, i)
    return labels


@njit(cache=True)
def spread_fixed_seeds(labels, seeds):
    """Per-world activated count for a fixed seed set: the total size of the
    distinct components the seeds touch."""
    B, n = labels.shape
    out = np.zeros(B, np.float64)
    cnt = np.zeros(n, np.int64)
    for b in range(B):
        for i in range(n):
            cnt[labels[b, i]] += 1
        total = 0.0
        for s in seeds:
            c = labels[b, s]
            if cnt[c] > 0:
                total += cnt[c]
                cnt[c] = 0
        out[b] = total
        for i in range(n):
            cnt[labels[b, i]] = 0
    return out


@njit(cache=True)
def spread_attendance(labels, invited, attend, committed):
    """Per-world activated count when invited[j] seeds world b iff attend[b, j],
    while committed nodes always seed."""
    B, n = labels.shape
    out = np.zeros(B, np.float64)
    cnt = np.zeros(n, np.int64)
    for b in range(B):
        for i in range(n):
            cnt[labels[b, i]] += 1
        total = 0.0
        for c in committed:
            r = labels[b, c]
            if cnt[r] > 0:
                total += cnt[r]
                cnt[r] = 0
        for j in range(invited.shape[0]):
            if attend[b, j]:
                r = labels[b, invited[j]]
                if cnt[r] > 0:
                    total += cnt[r]
                    cnt[r] = 0
        out[b] = total
        for i in range(n):
            cnt[labels[b, i]] = 0
    return out


@njit(cache=True)
def gradient_accumulate(labels, eligible, committed, select, attend):
    """Multilinear-gradient samples, one world per row.

    Per world: the sampled seed set is S = {eligible[j] : select[b, j]}, each
    member materializing iff attend[b, j]; committed always materialize. The
    sample for coordinate j is spread(S u {j}) - spread(S \\ {j}), which for
    component-structured spread is the size of j's component when j would
    attend and nobody else in S-or-committed touches that component, else 0.
    Returns per-coordinate sums and sums of squares over the batch.
    """
    B, n = labels.shape
    nel = eligible.shape[0]
    sum_g = np.zeros(nel, np.float64)
    sum_sq = np.zeros(nel, np.float64)
    cnt = np.zeros(n, np.int64)
    tcount = np.zeros(n, np.int64)
    for b in range(B):
        for i in range(n):
            cnt[labels[b, i]] += 1
        for c in committed:
            tcount[labels[b, c]] += 1
        for j in range(nel):
            if select[b, j] and attend[b, j]:
                tcount[labels[b, eligible[j]]] += 1
        for j in range(nel):
            if attend[b, j]:
                c = labels[b, eligible[j]]
                others = tcount[c]
                if select[b, j]:
                    others -= 1
                if others == 0:
                    g = float(cnt[c])
                    sum_g[j] += g
                    sum_sq[j] += g * g
        for i in range(n):
            r = labels[b, i]
            cnt[r] = 0
            tcount[r] = 0
    return sum_g, sum_sq


@njit(cache=True)
def fractional_value(labels, survival):
    """Per-world expected spread when node i independently fails to seed with
    probability survival[i] (0 for committed, 1 - q*x_i for fractional picks,
    1 for everything else). Collapses seed and attendance randomness in
    closed form per component."""
    B, n = labels.shape
    out = np.zeros(B, np.float64)
    cnt = np.zeros(n, np.int64)
    prod = np.ones(n, np.float64)
    for b in range(B):
        for i in range(n):
            cnt[labels[b, i]] += 1
        for i in range(n):
            if survival[i] != 1.0:
                prod[labels[b, i]] *= survival[i]
        total = 0.0
        for i in range(n):
            if labels[b, i] == i and prod[i] != 1.0:
                total += cnt[i] * (1.0 - prod[i])
        out[b] = total
        for i in range(n):
            r = labels[b, i]
            cnt[r] = 0
            prod[r] = 1.0
    return out


@njit(cache=True)
def exact_sweep(n, eu, ev, members, survival, acc):
    """Enumerate every edge subset; acc[m] accumulates the summed
    conditional value over subsets with exactly m edges present.

    The value of one subset is sum over components of size * (1 - prod of
    member survivals in that component). Combined with binomial weights
    p^m (1-p)^(E-m) this yields the exact expectation for any p.
    """
    E = eu.shape[0]
    parent = np.empty(n, np.int32)
    roots = np.empty(n, np.int32)
    cnt = np.zeros(n, np.int64)
    prod = np.ones(n, np.float64)
    nmem = members.shape[0]
    for mask in range(1 << E):
        for i in range(n):
            parent[i] = i
        pc = 0
        for e in range(E):
            if (mask >> e) & 1:
                pc += 1
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru < rv:
                    parent[rv] = ru
                elif rv < ru:
                    parent[ru] = rv
        for i in range(n):
            r = _find(parent, i)
            roots[i] = r
            cnt[r] += 1
        for j in range(nmem):
            prod[roots[members[j]]] *= survival[j]
        val = 0.0
        for j in range(nmem):
            r = roots[members[j]]
            if prod[r] != 1.0:
                val += cnt[r] * (1.0 - prod[r])
                prod[r] = 1.0
        acc[pc] += val
        for i in range(n):
            cnt[roots[i]] = 0
            prod[roots[i]] = 1.0
    return acc


@njit(cache=True)
def exact_sweep_sets(n, eu, ev, members, survival, sizes, acc):
    """Multi-set variant of exact_sweep sharing one enumeration pass.

    members: (S, kmax) node indices padded with -1; survival: (S, kmax);
    sizes[s] = number of valid members of set s; acc: (S, E+1).
    """
    E = eu.shape[0]
    S = members.shape[0]
    parent = np.empty(n, np.int32)
    roots = np.empty(n, np.int32)
    cnt = np.zeros(n, np.int64)
    for mask in range(1 << E):
        for i in range(n):
            parent[i] = i
        pc = 0
        for e in range(E):
            if (mask >> e) & 1:
                pc += 1
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru < rv:
                    parent[rv] = ru
                elif rv < ru:
                    parent[ru] = rv
        for i in range(n):
            r = _find(parent, i)
            roots[i] = r
            cnt[r] += 1
        for s in range(S):
            k = sizes[s]
            val = 0.0
            for a in range(k):
                ra = roots[members[s, a]]
                first = True
                for b in range(a):
                    if roots[members[s, b]] == ra:
                        first = False
                        break
                if first:
                    p_surv = 1.0
                    for b in range(k):
                        if roots[members[s, b]] == ra:
                            p_surv *= survival[s, b]
                    val += cnt[ra] * (1.0 - p_surv)
            acc[s, pc] += val
        for i in range(n):
            cnt[roots[i]] = 0
    return acc


@njit(cache=True)
def attendance_marginals(labels, invited, committed, cands, q):
    """Marginal-gain samples of adding each candidate to the invited set.

    Per world the gain of candidate v is q * size(comp(v)) * (1-q)^(invited
    members in comp(v)) when no committed node touches the component, else 0;
    this is the attendance-randomness expectation of spread(invited u {v}) -
    spread(invited) conditioned on the edge world. Returns per-candidate sums
    and sums of squares.
    """
    B, n = labels.shape
    nc = cands.shape[0]
    sum_g = np.zeros(nc, np.float64)
    sum_sq = np.zeros(nc, np.float64)
    cnt = np.zeros(n, np.int64)
    invcnt = np.zeros(n, np.int64)
    blocked = np.zeros(n, np.uint8)
    for b in range(B):
        for i in range(n):
            cnt[labels[b, i]] += 1
        for c in committed:
            blocked[labels[b, c]] = 1
        for j in invited:
            invcnt[labels[b, j]] += 1
        for jc in range(nc):
            r = labels[b, cands[jc]]
            if blocked[r] == 0:
                g = q * cnt[r] * (1.0 - q) ** invcnt[r]
                sum_g[jc] += g
                sum_sq[jc] += g * g
        for i in range(n):
            r = labels[b, i]
            cnt[r] = 0
            invcnt[r] = 0
            blocked[r] = 0
    return sum_g, sum_sq


@njit(cache=True)
def singleton_values(labels, candidates, committed, q):
    """Sums and sums-of-squares of the per-world attendance-weighted value of
    inviting each candidate alone on top of the committed set.

    Per world the value of candidate v is spread(committed) + q * size(comp(v))
    if v's component is untouched by committed, else spread(committed); the
    attendance coin is integrated out analytically.
    """
    B, n = labels.shape
    nc = candidates.shape[0]
    sum_v = np.zeros(nc, np.float64)
    sum_sq = np.zeros(nc, np.float64)
    cnt = np.zeros(n, np.int64)
    touched = np.zeros(n, np.uint8)
    for b in range(B):
        for i in range(n):
            cnt[labels[b, i]] += 1
        base = 0.0
        for c in committed:
            r = labels[b, c]
            if touched[r] == 0:
                touched[r] = 1
                base += cnt[r]
        for j in range(nc):
            r = labels[b, candidates[j]]
            v = base
            if touched[r] == 0:
                v += q * cnt[r]
            sum_v[j] += v
            sum_sq[j] += v * v
        for i in range(n):
            r = labels[b, i]
            cnt[r] = 0
            touched[r] = 0
    return sum_v, sum_sq
