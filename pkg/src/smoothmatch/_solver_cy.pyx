# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled shortest-augmenting-path assignment kernel.

Mirrors ``_solver_py.solve_dense`` operation for operation; the two backends
must return identical matchings and potentials on the same input.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def solve_dense(cost):
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = cost.shape[0]
    if cost.shape[0] != cost.shape[1]:
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.empty(0, dtype=np.int64), 0.0, np.empty(0), np.empty(0)

    cdef double[:, ::1] a = cost
    u_arr = np.zeros(n)
    v_arr = np.zeros(n + 1)
    p_arr = np.full(n + 1, -1, dtype=np.int64)
    way_arr = np.zeros(n, dtype=np.int64)
    minv_arr = np.empty(n)
    used_arr = np.zeros(n + 1, dtype=np.uint8)

    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef long long[::1] p = p_arr
    cdef long long[::1] way = way_arr
    cdef double[::1] minv = minv_arr
    cdef unsigned char[::1] used = used_arr

    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double cur, delta, inf = np.inf

    for i in range(n):
        p[n] = i
        j0 = n
        for j in range(n):
            minv[j] = inf
            used[j] = 0
        used[n] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = inf
            j1 = -1
            for j in range(n):
                if not used[j]:
                    cur = a[i0, j] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                elif j < n:
                    minv[j] -= delta
            j0 = j1
            if p[j0] < 0:
                break
        while j0 != n:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    col_of_row = np.empty(n, dtype=np.int64)
    cdef long long[::1] col = col_of_row
    for j in range(n):
        col[p[j]] = j
    cdef double total = 0.0
    for i in range(n):
        total += a[i, col[i]]
    return col_of_row, float(total), u_arr, v_arr[:n]
