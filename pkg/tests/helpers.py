"""Independent oracles used by the tests.

These deliberately avoid the package's own computation paths: brute-force
enumeration for matchings, Riemann sums for integrals, direct outcome
enumeration for small pmfs.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_matching(C: np.ndarray):
    """Min-cost perfect matching by permutation enumeration (n <= 7).

    Returns (cost, pairs) with the lexicographically smallest pair list
    among the optimal matchings.
    """
    n = C.shape[0]
    assert n <= 7, "brute force oracle limited to n <= 7"
    best = math.inf
    for perm in itertools.permutations(range(n)):
        best = min(best, sum(C[i, perm[i]] for i in range(n)))
    for perm in itertools.permutations(range(n)):
        cost = sum(C[i, perm[i]] for i in range(n))
        if cost <= best + 1e-12:
            return best, [(i, perm[i]) for i in range(n)]
    raise AssertionError("unreachable")


def pb_pmf_by_enumeration(p: np.ndarray) -> np.ndarray:
    """Poisson binomial pmf by enumerating all 2^n outcomes (n <= 12)."""
    n = len(p)
    assert n <= 12
    pmf = np.zeros(n + 1)
    for bits in itertools.product([0, 1], repeat=n):
        prob = 1.0
        for b, pi in zip(bits, p):
            prob *= pi if b else 1.0 - pi
        pmf[sum(bits)] += prob
    return pmf


def riemann_obstacle(S, R, L, step=1e-5) -> float:
    """Fine-grid Riemann sum for the d=1 window-imbalance integral."""
    S = np.sort(np.asarray(S, dtype=float).ravel())
    R = np.sort(np.asarray(R, dtype=float).ravel())
    xs = np.arange(0.0, 1.0 - L, step)
    s_cnt = np.searchsorted(S, xs + L, side="right") - np.searchsorted(S, xs, side="left")
    r_cnt = np.searchsorted(R, xs + L, side="right") - np.searchsorted(R, xs, side="left")
    return float(np.abs(s_cnt - r_cnt).sum() * step)


def mean_dist_to_point_2d(target, grid=2000) -> float:
    """Midpoint-rule double integral of ||x - target|| over the unit square."""
    ax = (np.arange(grid) + 0.5) / grid
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    D = np.sqrt((X - target[0]) ** 2 + (Y - target[1]) ** 2)
    return float(D.mean())


def crossing_pairs_in_matching(pairs, s_leaves, r_leaves, topology, node_height, node_index):
    """Count matched pairs whose endpoints lie in different child subtrees of
    the given node (LCA exactly at that node)."""
    count = 0
    for s_idx, r_idx in pairs:
        ls, lr = int(s_leaves[s_idx]), int(r_leaves[r_idx])
        k = topology.lca_height_leaves(ls, lr)
        if k == node_height and ls // topology.delta**node_height == node_index:
            count += 1
    return count
