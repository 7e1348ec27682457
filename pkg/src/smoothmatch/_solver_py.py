"""Pure-python (numpy) shortest-augmenting-path assignment solver.

Same algorithm and same floating-point operation order as the compiled
kernel in ``_solver_cy.pyx``, so both backends produce identical matchings
and potentials. Column n is the virtual free column of the alternating
tree; p[j] is the row currently assigned to column j (-1 when free).
"""

from __future__ import annotations

import numpy as np


def solve_dense(cost: np.ndarray):
    """Min-cost perfect matching on a dense n x n cost matrix.

    Returns (col_of_row, total, u, v) where u, v are optimal dual potentials
    with cost[i, j] - u[i] - v[j] >= 0 and equality on matched pairs.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.empty(0, dtype=np.int64), 0.0, np.empty(0), np.empty(0)

    u = np.zeros(n)
    v = np.zeros(n + 1)
    p = np.full(n + 1, -1, dtype=np.int64)
    way = np.zeros(n, dtype=np.int64)

    for i in range(n):
        p[n] = i
        j0 = n
        minv = np.full(n, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = cost[i0, :] - u[i0] - v[:n]
            better = ~used[:n] & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            masked = np.where(used[:n], np.inf, minv)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            used_cols = np.flatnonzero(used)
            u[p[used_cols]] += delta
            v[used_cols] -= delta
            minv[~used[:n]] -= delta
            j0 = j1
            if p[j0] < 0:
                break
        while j0 != n:
            j1 = int(way[j0])
            p[j0] = p[j1]
            j0 = j1

    col_of_row = np.empty(n, dtype=np.int64)
    col_of_row[p[:n]] = np.arange(n)
    total = float(cost[np.arange(n), col_of_row].sum())
    return col_of_row, total, u, v[:n]
