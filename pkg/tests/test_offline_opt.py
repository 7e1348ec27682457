import math

import numpy as np
import pytest

from smoothmatch import offline_opt as oo
from smoothmatch.hst import HstTopology, subtree_counts
from smoothmatch.metric_core import SmoothDistribution, subcube_histogram
from smoothmatch.rng import stream

from helpers import (
    brute_force_matching,
    crossing_pairs_in_matching,
    mean_dist_to_point_2d,
    riemann_obstacle,
)


def test_min_cost_matching_examples():
    m = oo.min_cost_matching(np.array([0.1, 0.9]), np.array([0.2, 0.8]))
    assert m.total_cost == pytest.approx(0.2, abs=1e-12)
    assert m.pairs == [(0, 0), (1, 1)]

    pts = np.array([[0.3, 0.4], [0.9, 0.1]])
    m = oo.min_cost_matching(pts, pts)
    assert m.total_cost == pytest.approx(0.0, abs=1e-12)

    m = oo.min_cost_matching(np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]]))
    assert m.total_cost == pytest.approx(math.sqrt(2), abs=1e-12)


def test_min_cost_matching_errors():
    with pytest.raises(ValueError):
        oo.min_cost_matching(np.zeros((2, 1)), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        oo.min_cost_matching(np.zeros((4097, 1)), np.zeros((4097, 1)))


def test_min_cost_matching_against_brute_force():
    rng = stream(41)
    for _ in range(40):
        n = int(rng.integers(1, 7))
        d = int(rng.integers(1, 4))
        S = rng.random((n, d))
        R = rng.random((n, d))
        m = oo.min_cost_matching(S, R)
        C = oo._cost_matrix(S, R, None)
        best, best_pairs = brute_force_matching(C)
        assert m.total_cost == pytest.approx(best, abs=1e-9)
        assert m.pairs == best_pairs
        # matching invariant: total equals the sum of pair distances
        recomputed = sum(np.linalg.norm(S[i] - R[j]) for i, j in m.pairs)
        assert m.total_cost == pytest.approx(recomputed, abs=1e-9)


def test_min_cost_matching_lexicographic_ties():
    # duplicated points: many zero-cost optima; lexicographically smallest wins
    S = np.array([0.5, 0.5, 0.5])
    m = oo.min_cost_matching(S, S)
    assert m.pairs == [(0, 0), (1, 1), (2, 2)]
    # tie between two symmetric optima on four colinear points
    S = np.array([0.0, 1.0])
    R = np.array([0.5, 0.5])
    m = oo.min_cost_matching(S, R)
    assert m.total_cost == pytest.approx(1.0, abs=1e-12)
    assert m.pairs == [(0, 0), (1, 1)]


def test_min_cost_matching_lex_ties_against_brute_force():
    rng = stream(42)
    grid = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    for _ in range(50):
        n = int(rng.integers(2, 6))
        S = grid[rng.integers(0, 5, size=n)]
        R = grid[rng.integers(0, 5, size=n)]
        m = oo.min_cost_matching(S, R)
        C = oo._cost_matrix(S, R, None)
        best, best_pairs = brute_force_matching(C)
        assert m.total_cost == pytest.approx(best, abs=1e-12)
        assert m.pairs == best_pairs


def test_sorted_matching_identity():
    rng = stream(43)
    for _ in range(50):
        n = int(rng.integers(1, 50))
        S, R = rng.random(n), rng.random(n)
        assert oo.min_cost_matching(S, R).total_cost == pytest.approx(
            oo.sorted_matching_cost_1d(S, R), abs=1e-9
        )


def test_crossing_count():
    assert oo.crossing_count([1, 1], [2, 0]) == 1
    assert oo.crossing_count([3, 2], [3, 2]) == 0
    assert oo.crossing_count([0, 3], [3, 0]) == 3
    with pytest.raises(ValueError):
        oo.crossing_count([-1, 0], [0, 0])


def test_crossing_count_matches_actual_matching():
    rng = stream(44)
    for _ in range(30):
        h = int(rng.integers(1, 3))
        topo = HstTopology(delta=2, alpha=2.0, height=h)
        n = int(rng.integers(1, 7))
        s_leaves = rng.integers(0, topo.num_leaves, size=n)
        r_leaves = rng.integers(0, topo.num_leaves, size=n)
        counts = subtree_counts(topo, s_leaves, r_leaves)
        m = oo.min_cost_matching(
            s_leaves,
            r_leaves,
            metric=lambda a, b: topo.leaf_distance(topo.lca_height_leaves(int(a), int(b))),
        )
        for j in range(1, h + 1):
            for idx in range(topo.nodes_at(j)):
                s_children = counts.s_hat[j - 1][idx * 2 : idx * 2 + 2]
                r_children = counts.r_hat[j - 1][idx * 2 : idx * 2 + 2]
                expected = oo.crossing_count(s_children, r_children)
                actual = crossing_pairs_in_matching(m.pairs, s_leaves, r_leaves, topo, j, idx)
                assert actual == expected


def test_hst_opt_cost_examples():
    topo = HstTopology(delta=2, alpha=2.0, height=1)
    counts = subtree_counts(topo, [0, 0], [0, 1])
    assert oo.hst_opt_cost(topo, counts) == pytest.approx(2.0, abs=1e-12)

    counts = subtree_counts(topo, [0, 1], [0, 1])
    assert oo.hst_opt_cost(topo, counts) == 0.0

    topo = HstTopology(delta=2, alpha=2.0, height=2)
    counts = subtree_counts(topo, [0], [3])
    assert oo.hst_opt_cost(topo, counts) == pytest.approx(3.0, abs=1e-12)

    with pytest.raises(ValueError):
        oo.hst_opt_cost(topo, subtree_counts(topo, [0], [1, 2]))


def test_hst_opt_equals_solver_on_random_instances():
    rng = stream(45)
    for _ in range(200):
        h = int(rng.integers(1, 4))
        topo = HstTopology(delta=2, alpha=2.0, height=h)
        n = int(rng.integers(1, 9))
        s_leaves = rng.integers(0, topo.num_leaves, size=n)
        r_leaves = rng.integers(0, topo.num_leaves, size=n)
        closed = oo.hst_opt_cost(topo, subtree_counts(topo, s_leaves, r_leaves))
        solved = oo.min_cost_matching(
            s_leaves,
            r_leaves,
            metric=lambda a, b: topo.leaf_distance(topo.lca_height_leaves(int(a), int(b))),
        ).total_cost
        assert closed == pytest.approx(solved, abs=1e-9)


def test_obstacle_integral_examples():
    assert oo.obstacle_integral_d1([0.5], [0.5], 0.3) == 0.0
    # windows [x, x+L] for x in [0, 0.75] contain neither endpoint on a
    # positive-measure set, so the integral vanishes (Riemann oracle agrees)
    val = oo.obstacle_integral_d1([0.0], [1.0], 0.25)
    assert val == pytest.approx(riemann_obstacle([0.0], [1.0], 0.25), abs=1e-4)
    assert val == pytest.approx(0.0, abs=1e-12)
    assert oo.obstacle_integral_d1([0.1, 0.9], [0.1, 0.9], 0.4) == 0.0
    with pytest.raises(ValueError):
        oo.obstacle_integral_d1(np.zeros((2, 2)), np.zeros((2, 2)), 0.3)
    with pytest.raises(ValueError):
        oo.obstacle_integral_d1([0.5], [0.5], 1.5)


def test_obstacle_integral_matches_riemann_oracle():
    rng = stream(46)
    for _ in range(10):
        n = int(rng.integers(1, 12))
        S, R = rng.random(n), rng.random(n)
        L = float(rng.uniform(0.1, 0.8))
        exact = oo.obstacle_integral_d1(S, R, L)
        approx = riemann_obstacle(S, R, L)
        assert exact == pytest.approx(approx, abs=5e-4 * max(1, n))


def test_obstacle_at_most_twice_opt():
    rng = stream(47)
    for _ in range(50):
        n = int(rng.integers(1, 40))
        S, R = rng.random(n), rng.random(n)
        L = float(rng.uniform(0.05, 0.9))
        opt = oo.min_cost_matching(S, R).total_cost
        assert oo.obstacle_integral_d1(S, R, L) <= 2.0 * opt + 1e-9


def test_window_expected_mass():
    dists = [SmoothDistribution.uniform(1)] * 4
    assert oo.window_expected_mass(dists, 0.3, 0.25) == pytest.approx(1.0, abs=1e-12)
    masses = np.zeros(8)
    masses[:2] = 0.5  # support [0, 0.25)
    hist = SmoothDistribution.histogram(masses, sigma=0.25, d=1)
    assert oo.window_expected_mass([hist], 0.5, 0.25) == 0.0
    with pytest.raises(ValueError):
        oo.window_expected_mass([SmoothDistribution.uniform(2)], 0.1, 0.2)
    with pytest.raises(ValueError):
        oo.window_expected_mass(dists, 0.9, 0.2)


def test_window_mass_integral_uniform_matches_quadrature():
    # uniform: W(x) = nL, so the integral is nL(1 - L)
    dists = [SmoothDistribution.uniform(1)] * 5
    for L in (0.1, 0.25, 0.5):
        assert oo.window_mass_integral(dists, L) == pytest.approx(5 * L * (1 - L), abs=1e-12)


def test_window_mass_lower_bound_heterogeneous():
    rng = stream(48)
    for _ in range(20):
        sigma = float(rng.uniform(0.1, 1.0))
        n = int(rng.integers(4, 30))
        dists = [subcube_histogram(1, sigma, rng, resolution=64) for _ in range(n)]
        L = sigma / 4.0
        assert oo.window_mass_integral(dists, L) >= L * n / 2.0 - 1e-9


def test_lb_reference():
    assert oo.lb_reference(1, 1.0, 100, 1.0) == pytest.approx(10.0, abs=1e-12)
    assert oo.lb_reference(2, 1.0, 100, 1.0) == pytest.approx(10.0, abs=1e-12)
    assert oo.lb_reference(3, 0.5, 1000, 1.0) == pytest.approx(0.5 ** (1 / 3) * 1000 ** (2 / 3), rel=1e-12)
    with pytest.raises(ValueError):
        oo.lb_reference(1, 0.0, 10, 1.0)


def test_nearest_neighbor_mean_point_mass():
    masses = np.zeros((8, 8))
    masses[3, 3] = 1.0
    dist = SmoothDistribution.histogram(masses, sigma=1.0 / 64.0, d=2)
    S = dist.sample(stream(49), size=80)  # cover the support cell densely
    mean, se = oo.nearest_neighbor_mean(S, dist, 500, stream(50))
    assert mean < 0.07  # draws land in the same 1/8-cell as some server


def test_nearest_neighbor_mean_center_of_square():
    dist = SmoothDistribution.uniform(2)
    mean, se = oo.nearest_neighbor_mean(np.array([[0.5, 0.5]]), dist, 100_000, stream(51))
    oracle = mean_dist_to_point_2d((0.5, 0.5))
    assert mean == pytest.approx(oracle, abs=0.003)
    assert se < 0.002


def test_nearest_neighbor_mean_monotone_in_servers():
    dist = SmoothDistribution.uniform(2)
    S1 = np.array([[0.2, 0.2]])
    S2 = np.vstack([S1, [[0.8, 0.8]]])
    m1, _ = oo.nearest_neighbor_mean(S1, dist, 20_000, stream(52))
    m2, _ = oo.nearest_neighbor_mean(S2, dist, 20_000, stream(52))
    assert m2 <= m1 + 1e-9
