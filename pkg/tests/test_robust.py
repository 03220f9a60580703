import string
from itertools import combinations
from math import ceil

import numpy as np
import pytest

import bruteforce
from peerplan import cascade, greedy, robust
from peerplan.netgraph import Graph, Roster


def named_graph(n, edges):
    tokens = [f"n{i}" for i in range(n)] if n > 26 else string.ascii_lowercase[:n]
    return Graph(Roster(tokens), edges)


TRIANGLE = named_graph(3, [(0, 1), (1, 2), (0, 2)])
PATH4 = named_graph(4, [(0, 1), (1, 2), (2, 3)])
TWO_STARS = named_graph(12, [(0, i) for i in range(1, 6)] + [(6, j) for j in range(7, 12)])


class TestUncertaintySet:
    def test_even_spacing(self):
        u = robust.make_uncertainty_set(0.1, 0.9, 5)
        assert list(u) == pytest.approx([0.1, 0.3, 0.5, 0.7, 0.9])

    def test_single_value(self):
        assert list(robust.make_uncertainty_set(0.5, 0.5, 1)) == [0.5]

    def test_reversed_bounds_rejected(self):
        with pytest.raises(ValueError):
            robust.make_uncertainty_set(0.9, 0.1, 3)

    def test_count_zero_rejected(self):
        with pytest.raises(ValueError):
            robust.make_uncertainty_set(0.1, 0.9, 0)

    def test_default_set(self):
        u = robust.default_uncertainty_set()
        assert len(u) == 10
        assert u[0] == pytest.approx(0.05)
        assert u[-1] == pytest.approx(0.95)

    def test_rejects_nonincreasing(self):
        with pytest.raises(ValueError):
            robust.UncertaintySet((0.5, 0.5))


class TestMarginalVector:
    def test_valid(self):
        x = robust.MarginalVector((0, 2), np.array([0.5, 0.5]), 1)
        assert x.as_dict() == {0: 0.5, 2: 0.5}

    def test_rejects_mass_over_budget(self):
        with pytest.raises(ValueError):
            robust.MarginalVector((0, 1), np.array([0.9, 0.9]), 1)

    def test_rejects_entry_over_one(self):
        with pytest.raises(ValueError):
            robust.MarginalVector((0,), np.array([1.2]), 2)

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            robust.MarginalVector((0, 0), np.array([0.1, 0.1]), 1)


class TestScenarioWeights:
    def test_valid(self):
        robust.ScenarioWeights(np.array([0.25, 0.75]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            robust.ScenarioWeights(np.array([-0.1, 1.1]))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            robust.ScenarioWeights(np.array([0.5, 0.6]))


class TestProjection:
    def test_feasible_point_unchanged(self):
        v = np.array([0.2, 0.3, 0.1])
        assert robust.project_box_simplex(v, 2) == pytest.approx(v)

    def test_box_clipping(self):
        got = robust.project_box_simplex(np.array([1.4, -0.3]), 2)
        assert got == pytest.approx([1.0, 0.0])

    def test_budget_active(self):
        got = robust.project_box_simplex(np.array([0.9, 0.9, 0.9]), 1)
        assert got.sum() == pytest.approx(1.0, abs=1e-9)
        assert got == pytest.approx([1 / 3, 1 / 3, 1 / 3])

    def test_is_closest_feasible_point(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            k = int(rng.integers(1, n + 1))
            v = rng.normal(0.5, 1.0, size=n)
            proj = robust.project_box_simplex(v, k)
            assert proj.min() >= -1e-9 and proj.max() <= 1 + 1e-9
            assert proj.sum() <= k + 1e-6
            d_proj = np.sum((proj - v) ** 2)
            for _ in range(200):
                z = rng.uniform(0, 1, size=n)
                if z.sum() > k:
                    z *= k / z.sum()
                assert d_proj <= np.sum((z - v) ** 2) + 1e-9


class TestSwapRound:
    def test_integral_passthrough(self):
        x = robust.MarginalVector((0, 1, 2), np.array([1.0, 0.0, 0.0]), 1)
        rng = np.random.default_rng(0)
        assert all(robust.swap_round(x, rng) == {0} for _ in range(20))

    def test_all_zero(self):
        x = robust.MarginalVector((0, 1), np.zeros(2), 1)
        assert robust.swap_round(x, np.random.default_rng(0)) == set()

    def test_half_half_never_both(self):
        x = robust.MarginalVector((0, 1), np.array([0.5, 0.5]), 1)
        rng = np.random.default_rng(1)
        draws = 10_000
        count0 = 0
        for _ in range(draws):
            s = robust.swap_round(x, rng)
            assert len(s) == 1
            count0 += 0 in s
        band = 3 * np.sqrt(0.25 / draws)
        assert abs(count0 / draws - 0.5) <= band

    def test_marginals_preserved(self):
        rng = np.random.default_rng(2)
        vals = np.array([0.15, 0.7, 0.35, 0.8, 0.5])
        k = ceil(vals.sum())
        x = robust.MarginalVector(tuple(range(5)), vals, k)
        draws = 10_000
        hits = np.zeros(5)
        for _ in range(draws):
            s = robust.swap_round(x, rng)
            assert len(s) <= k
            for v in s:
                hits[v] += 1
        freq = hits / draws
        bands = 3 * np.sqrt(vals * (1 - vals) / draws)
        assert np.all(np.abs(freq - vals) <= bands)

    def test_cardinality_never_exceeds_mass_ceiling(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(1, 8))
            vals = rng.uniform(0, 1, size=n)
            k = ceil(vals.sum())
            x = robust.MarginalVector(tuple(range(n)), vals, max(k, 1))
            assert len(robust.swap_round(x, rng)) <= ceil(vals.sum())


class TestNormalizedValue:
    def test_p_zero_full_budget(self):
        cache = greedy.OptCache(PATH4, 2, 1.0, exact=True)
        got = robust.normalized_value(PATH4, {0, 2}, 0.0, 1.0, (), cache)
        assert got == pytest.approx(1.0)

    def test_optimum_self_normalizes(self):
        cache = greedy.OptCache(PATH4, 2, 0.6, exact=True)
        best, _ = greedy.exhaustive_opt(PATH4, 2, 0.45, 0.6)
        got = robust.normalized_value(PATH4, best, 0.45, 0.6, (), cache)
        assert got == pytest.approx(1.0)

    def test_triangle_singleton_symmetric(self):
        cache = greedy.OptCache(TRIANGLE, 1, 1.0, exact=True)
        got = robust.normalized_value(TRIANGLE, {0}, 0.5, 1.0, (), cache)
        assert got == pytest.approx(1.0)

    def test_degenerate_ratio_rejected(self):
        cache = greedy.OptCache(TRIANGLE, 1, 0.0, exact=True)
        with pytest.raises(ValueError):
            robust.normalized_value(TRIANGLE, {0}, 0.5, 0.0, (), cache)


def exact_worst_value(g, sol, U, q, cache):
    vals = []
    for p in U:
        opt = greedy.opt_estimate(g, sol.x.k, p, q, (), cache)
        vals.append(
            cascade.exact_multilinear(g, list(sol.x.eligible), sol.x.values, p, q) / opt
        )
    return min(vals)


class TestSolveRobust:
    def test_single_scenario_meets_greedy_guarantee(self):
        g = TWO_STARS
        U = robust.make_uncertainty_set(0.5, 0.5, 1)
        cache = greedy.OptCache(g, 2, 1.0, exact=True)
        rng = np.random.default_rng(11)
        sol = robust.solve_robust(
            g, 2, U, 1.0, iters=200, samples_per_iter=60, rng=rng, opt_cache=cache
        )
        best = robust.sample_best(
            g, sol.x, 2, U, 1.0, rng=rng, opt_cache=cache, num_candidate_sets=10
        )
        _, opt = greedy.exhaustive_opt(g, 2, 0.5, 1.0)
        assert best.worst_value * opt >= (1 - 1 / np.e) * opt - 1e-6

    def test_two_stars_mass_on_hubs(self):
        g = TWO_STARS
        U = robust.make_uncertainty_set(0.5, 0.5, 1)
        cache = greedy.OptCache(g, 2, 1.0, exact=True)
        sol = robust.solve_robust(
            g, 2, U, 1.0,
            iters=600, samples_per_iter=100, rng=np.random.default_rng(12),
            opt_cache=cache,
        )
        xd = sol.x.as_dict()
        assert xd[0] + xd[6] >= 1.8

    def test_budget_equals_pool(self):
        cache = greedy.OptCache(TRIANGLE, 3, 0.5, exact=True)
        sol = robust.solve_robust(
            TRIANGLE, 3, robust.make_uncertainty_set(0.2, 0.8, 3), 0.5,
            iters=30, samples_per_iter=20, rng=np.random.default_rng(13),
            opt_cache=cache,
        )
        assert sol.x.values == pytest.approx(np.ones(3))
        assert sol.diagnostics["worst_value"] == pytest.approx(1.0, abs=0.05)

    def test_weights_trace_rows_are_distributions(self):
        cache = greedy.OptCache(PATH4, 1, 0.5, exact=True)
        sol = robust.solve_robust(
            PATH4, 1, robust.make_uncertainty_set(0.2, 0.8, 4), 0.5,
            iters=40, samples_per_iter=20, rng=np.random.default_rng(14),
            opt_cache=cache,
        )
        assert sol.weights_trace.shape == (40, 4)
        for row in sol.weights_trace:
            robust.ScenarioWeights(row)  # validates

    def test_longer_run_does_not_degrade(self):
        g = named_graph(6, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5)])
        U = robust.make_uncertainty_set(0.2, 0.8, 3)
        cache = greedy.OptCache(g, 2, 0.5, exact=True)
        worsts = {}
        for iters in (60, 120):
            sol = robust.solve_robust(
                g, 2, U, 0.5, iters=iters, samples_per_iter=40,
                rng=np.random.default_rng(15), opt_cache=cache,
            )
            worsts[iters] = exact_worst_value(g, sol, U, 0.5, cache)
        assert worsts[120] >= worsts[60] - 0.02

    def test_pool_smaller_than_budget_rejected(self):
        with pytest.raises(ValueError):
            robust.solve_robust(
                TRIANGLE, 3, robust.make_uncertainty_set(0.5, 0.5, 1), 0.5,
                committed={0}, iters=5, rng=np.random.default_rng(0),
            )


class TestSampleBest:
    def test_integral_vector_is_deterministic(self):
        x = robust.MarginalVector((0, 1, 2, 3), np.array([1.0, 0.0, 1.0, 0.0]), 2)
        cache = greedy.OptCache(PATH4, 2, 0.5, exact=True)
        sol = robust.sample_best(
            PATH4, x, 2, robust.make_uncertainty_set(0.3, 0.7, 3), 0.5,
            num_candidate_sets=5, rng=np.random.default_rng(16), opt_cache=cache,
        )
        assert sol.selected == {0, 2}
        assert sol.worst_value == pytest.approx(min(sol.scenario_values))

    def test_worst_scenario_identified(self):
        x = robust.MarginalVector((0, 1, 2, 3), np.array([1.0, 0.0, 0.0, 0.0]), 1)
        U = robust.make_uncertainty_set(0.1, 0.9, 5)
        cache = greedy.OptCache(PATH4, 1, 0.5, exact=True)
        sol = robust.sample_best(
            PATH4, x, 1, U, 0.5, num_candidate_sets=1,
            rng=np.random.default_rng(17), opt_cache=cache,
        )
        worst_idx = int(np.argmin(sol.scenario_values))
        assert sol.worst_scenario == pytest.approx(U[worst_idx])

    def test_robust_guarantee_on_small_instances(self):
        # end-to-end: solver + rounding beats (1-1/e)^2 of the best pure set
        rng = np.random.default_rng(18)
        bound = (1 - 1 / np.e) ** 2
        for edges in ([(0, 1), (1, 2), (2, 3), (3, 0)], [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)]):
            g = named_graph(5, edges)
            U = robust.make_uncertainty_set(0.2, 0.8, 3)
            cache = greedy.OptCache(g, 2, 0.5, exact=True)
            sol = robust.solve_robust(
                g, 2, U, 0.5, iters=150, samples_per_iter=50, rng=rng, opt_cache=cache
            )
            best = robust.sample_best(
                g, sol.x, 2, U, 0.5, num_candidate_sets=20, rng=rng, opt_cache=cache
            )
            pool = list(range(5))
            _, pure = bruteforce.brute_max_min(g, pool, [], 2, list(U), 0.5)
            assert best.worst_value >= bound * pure - 1e-9
