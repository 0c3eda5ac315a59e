"""Tableau pivoting kernels (numba and numpy variants).

Tableau layout: rows ``0..m-1`` are constraints, row ``m`` holds the
phase-2 reduced costs and row ``m+1`` the phase-1 reduced costs. The last
column is the right-hand side.
"""
from __future__ import annotations

import numpy as np

from .._accel import USE_NUMBA, njit

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

# consecutive degenerate pivots before switching to Bland's rule
BLAND_AFTER = 30


def pivot_loop_py(T, basis, obj_row, n_enter, tol, max_iter):
    m = T.shape[0] - 2
    rhs = T.shape[1] - 1
    degenerate = 0
    it = 0
    while it < max_iter:
        costs = T[obj_row, :n_enter]
        if degenerate >= BLAND_AFTER:
            cand = np.nonzero(costs < -tol)[0]
            if cand.size == 0:
                return OPTIMAL, it
            q = int(cand[0])
        else:
            q = int(np.argmin(costs))
            if costs[q] >= -tol:
                return OPTIMAL, it
        col = T[:m, q]
        p = -1
        best = np.inf
        for i in range(m):
            a = col[i]
            if a > tol:
                r = T[i, rhs] / a
                if p < 0 or r < best - 1e-12 * (1.0 + abs(best)):
                    best = r
                    p = i
                elif r <= best + 1e-12 * (1.0 + abs(best)) and basis[i] < basis[p]:
                    p = i
        if p < 0:
            return UNBOUNDED, it
        piv = T[p] / T[p, q]
        f = T[:, q].copy()
        f[p] = 0.0
        T -= np.outer(f, piv)
        T[p] = piv
        basis[p] = q
        degenerate = degenerate + 1 if best <= tol else 0
        it += 1
    return ITERATION_LIMIT, it


@njit(cache=True)
def _pivot_loop_nb(T, basis, obj_row, n_enter, tol, max_iter):
    m = T.shape[0] - 2
    ncol = T.shape[1]
    rhs = ncol - 1
    degenerate = 0
    it = 0
    while it < max_iter:
        q = -1
        if degenerate >= BLAND_AFTER:
            for j in range(n_enter):
                if T[obj_row, j] < -tol:
                    q = j
                    break
        else:
            low = -tol
            for j in range(n_enter):
                if T[obj_row, j] < low:
                    low = T[obj_row, j]
                    q = j
        if q < 0:
            return OPTIMAL, it
        p = -1
        best = np.inf
        for i in range(m):
            a = T[i, q]
            if a > tol:
                r = T[i, rhs] / a
                if p < 0 or r < best - 1e-12 * (1.0 + abs(best)):
                    best = r
                    p = i
                elif r <= best + 1e-12 * (1.0 + abs(best)) and basis[i] < basis[p]:
                    p = i
        if p < 0:
            return UNBOUNDED, it
        pv = T[p, q]
        for j in range(ncol):
            T[p, j] /= pv
        for i in range(T.shape[0]):
            if i != p:
                f = T[i, q]
                if f != 0.0:
                    for j in range(ncol):
                        T[i, j] -= f * T[p, j]
        basis[p] = q
        if best <= tol:
            degenerate += 1
        else:
            degenerate = 0
        it += 1
    return ITERATION_LIMIT, it


def pivot_loop(T, basis, obj_row, n_enter, tol, max_iter):
    """Run simplex pivots in place; returns ``(status, iterations)``."""
    if USE_NUMBA:
        status, it = _pivot_loop_nb(T, basis, obj_row, n_enter, tol, max_iter)
        return int(status), int(it)
    return pivot_loop_py(T, basis, obj_row, n_enter, tol, max_iter)
