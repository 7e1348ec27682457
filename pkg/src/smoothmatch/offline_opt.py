"""Exact offline optimum oracles and lower-bound diagnostics.

Min-cost perfect matching via the assignment kernel, the closed-form tree
optimum from per-node crossing counts, and the d=1 sliding-window obstacle
integrals used as lower-bound diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import assignment
from .hst import HstTopology, NodeCounts
from .metric_core import euclid_dist, pairwise_dists

MAX_MATCHING_SIZE = 4096

# Lexicographic tie canonicalization is exact but quadratic in the number of
# feasibility probes; above this size ties are vanishingly rare for the
# continuous instances we solve and the solver's deterministic matching is
# returned as-is.
LEX_CANON_MAX = 64


@dataclass
class Matching:
    """A perfect pairing (server index, request index) with its total cost."""

    pairs: list[tuple[int, int]]
    total_cost: float

    def server_to_request(self) -> dict[int, int]:
        return {s: r for s, r in self.pairs}

    def request_to_server(self) -> dict[int, int]:
        return {r: s for s, r in self.pairs}


def _cost_matrix(S, R, metric) -> np.ndarray:
    if metric is None or metric is euclid_dist:
        S2 = np.asarray(S, dtype=float)
        R2 = np.asarray(R, dtype=float)
        if S2.ndim == 1:
            S2 = S2[:, None]
        if R2.ndim == 1:
            R2 = R2[:, None]
        return pairwise_dists(S2, R2)
    n = len(S)
    C = np.empty((n, len(R)))
    for i in range(n):
        for j in range(len(R)):
            C[i, j] = metric(S[i], R[j])
    return C


def min_cost_matching(S, R, metric=None) -> Matching:
    """Globally optimal perfect matching between equal-size point sets.

    Under cost ties the lexicographically smallest pair list is returned
    (exact for n <= LEX_CANON_MAX; larger instances fall back to the
    solver's deterministic choice).
    """
    n = len(S)
    if len(R) != n:
        raise ValueError(f"size mismatch: {n} servers vs {len(R)} requests")
    if n > MAX_MATCHING_SIZE:
        raise ValueError(f"instance size {n} exceeds limit {MAX_MATCHING_SIZE}")
    if n == 0:
        return Matching([], 0.0)
    C = _cost_matrix(S, R, metric)
    col_of_row, total, u, v = assignment.solve_dense(C)
    col_of_row = _lex_canonicalize(C, col_of_row, u, v)
    total = float(C[np.arange(n), col_of_row].sum())
    return Matching([(i, int(col_of_row[i])) for i in range(n)], total)


def _lex_canonicalize(C, col_of_row, u, v) -> np.ndarray:
    """Among all min-cost matchings pick the lexicographically smallest pair
    list, using the optimal duals: the optimal matchings are exactly the
    perfect matchings of the tight subgraph c - u - v = 0."""
    n = C.shape[0]
    scale = max(1.0, float(np.abs(C).max()))
    tight = (C - u[:, None] - v[None, :]) <= 1e-9 * scale
    if int(tight.sum()) == n or n > LEX_CANON_MAX:
        return col_of_row
    cols = [np.flatnonzero(tight[i]) for i in range(n)]
    chosen = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n, dtype=bool)
    for i in range(n):
        for j in cols[i]:
            if used[j]:
                continue
            used[j] = True
            if _perfect_matching_exists(cols, used, i + 1, n):
                chosen[i] = j
                break
            used[j] = False
        if chosen[i] < 0:
            # Cannot happen when duals are optimal; keep the solver's answer.
            return col_of_row
    return chosen


def _perfect_matching_exists(cols, used_cols, row_start, n) -> bool:
    """Kuhn's algorithm: can rows row_start..n-1 all be matched into the
    still-free columns of the tight subgraph?"""
    match_col = {}

    def try_row(i, seen):
        for j in cols[i]:
            if used_cols[j] or j in seen:
                continue
            seen.add(j)
            if j not in match_col or try_row(match_col[j], seen):
                match_col[j] = i
                return True
        return False

    for i in range(row_start, n):
        if not try_row(i, set()):
            return False
    return True


def sorted_matching_cost_1d(S, R) -> float:
    """Classical line identity: optimal cost equals matching sorted S to
    sorted R. Used as an independent oracle for the assignment solver."""
    S = np.sort(np.asarray(S, dtype=float).ravel())
    R = np.sort(np.asarray(R, dtype=float).ravel())
    if S.size != R.size:
        raise ValueError("size mismatch")
    return float(np.abs(S - R).sum())


def crossing_count(s_hat_children, r_hat_children) -> int:
    """Number of optimal-matching pairs whose endpoints lie in different
    child subtrees: min{sum (r-s)^+, sum (s-r)^+} over the children."""
    s = np.asarray(s_hat_children, dtype=np.int64)
    r = np.asarray(r_hat_children, dtype=np.int64)
    if (s < 0).any() or (r < 0).any():
        raise ValueError("counts must be nonnegative")
    return int(min(np.maximum(r - s, 0).sum(), np.maximum(s - r, 0).sum()))


def hst_opt_cost(topology: HstTopology, counts: NodeCounts) -> float:
    """Closed-form optimum on the tree: each internal node at height k
    contributes crossing_count(v) times the leaf distance at LCA height k."""
    if counts.s_hat[-1][0] != counts.r_hat[-1][0]:
        raise ValueError("unbalanced instance: root server and request counts differ")
    dist = topology.leaf_distance_table()
    total = 0.0
    for k in range(1, topology.height + 1):
        s_child = counts.s_hat[k - 1].reshape(-1, topology.delta)
        r_child = counts.r_hat[k - 1].reshape(-1, topology.delta)
        pos = np.maximum(r_child - s_child, 0).sum(axis=1)
        neg = np.maximum(s_child - r_child, 0).sum(axis=1)
        total += float(dist[k]) * float(np.minimum(pos, neg).sum())
    return total


def obstacle_integral_d1(S, R, L: float) -> float:
    """Exact integral over x in [0, 1-L] of |#S in [x, x+L] - #R in [x, x+L]|.

    The integrand is piecewise constant with breakpoints at {p - L, p} for
    every point p, so event-point decomposition is exact.
    """
    S = np.asarray(S, dtype=float)
    R = np.asarray(R, dtype=float)
    if (S.ndim == 2 and S.shape[1] != 1) or (R.ndim == 2 and R.shape[1] != 1):
        raise ValueError("obstacle integral is defined for d=1 only")
    S = np.sort(S.ravel())
    R = np.sort(R.ravel())
    if not 0.0 < L < 1.0:
        raise ValueError("window length must lie in (0, 1)")
    hi = 1.0 - L
    events = np.concatenate([S, S - L, R, R - L, [0.0, hi]])
    events = np.unique(np.clip(events, 0.0, hi))
    total = 0.0
    for a, b in zip(events[:-1], events[1:]):
        m = (a + b) / 2.0
        s_cnt = np.searchsorted(S, m + L, side="right") - np.searchsorted(S, m, side="left")
        r_cnt = np.searchsorted(R, m + L, side="right") - np.searchsorted(R, m, side="left")
        total += abs(int(s_cnt) - int(r_cnt)) * (b - a)
    return total


def window_expected_mass(dists, x: float, L: float) -> float:
    """W(x): expected number of requests in the window [x, x+L] under the
    given d=1 distributions."""
    if not (0.0 <= x and x + L <= 1.0 + 1e-12):
        raise ValueError("window [x, x+L] must lie inside [0, 1]")
    total = 0.0
    for dist in dists:
        if dist.d != 1:
            raise ValueError("window mass is defined for d=1 distributions")
        total += dist.cdf1d(min(x + L, 1.0)) - dist.cdf1d(x)
    return total


def window_mass_integral(dists, L: float) -> float:
    """Exact integral of W(x) over [0, 1-L]: per distribution it equals
    int_L^1 F - int_0^(1-L) F for the piecewise-linear CDF F."""
    if not 0.0 < L < 1.0:
        raise ValueError("window length must lie in (0, 1)")
    total = 0.0
    for dist in dists:
        total += dist.cdf1d_integral(L, 1.0) - dist.cdf1d_integral(0.0, 1.0 - L)
    return total


def lb_reference(d: int, sigma: float, n: int, c: float) -> float:
    """Reference lower-bound curve for the offline optimum:
    c * sigma * sqrt(n) on the line, c * sigma^(1/d) * n^(1-1/d) for d >= 2.
    c is a fit parameter; the analysis leaves the constant unspecified."""
    if not 0.0 < sigma <= 1.0:
        raise ValueError("sigma must lie in (0, 1]")
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if d == 1:
        return c * sigma * math.sqrt(n)
    return c * sigma ** (1.0 / d) * n ** (1.0 - 1.0 / d)


def nearest_neighbor_mean(S, dist, trials: int, rng) -> tuple[float, float]:
    """Monte Carlo estimate (mean, standard error) of the expected distance
    from a draw of ``dist`` to its nearest point of S."""
    S = np.asarray(S, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    if S.shape[0] < 1:
        raise ValueError("need at least one server")
    mins = np.empty(trials)
    chunk = max(1, min(trials, 20000))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        pts = dist.sample(rng, size=m)
        mins[done : done + m] = pairwise_dists(pts, S).min(axis=1)
        done += m
    mean = float(mins.mean())
    se = float(mins.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return mean, se
