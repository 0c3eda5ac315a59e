"""Warm-started re-pricing and gray-code corner scans (numba and numpy variants).

The tableau is the one of :mod:`mmptol.lp._kernels`: ``k`` constraint rows,
row ``k`` for costs, row ``k + 1`` spare, right-hand side last.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit
from .lp import _kernels

TIE = 1e-12


def reprice_py(T, basis, c):
    k = T.shape[0] - 2
    n = c.shape[0]
    cb = np.zeros(k)
    for i in range(k):
        if basis[i] < n:
            cb[i] = c[basis[i]]
    T[k, :] = -(cb @ T[:k, :])
    T[k, :n] += c


@njit(cache=True, nogil=True)
def _reprice_nb(T, basis, c):
    k = T.shape[0] - 2
    n = c.shape[0]
    ncol = T.shape[1]
    for j in range(ncol):
        T[k, j] = 0.0
    for j in range(n):
        T[k, j] = c[j]
    for i in range(k):
        b = basis[i]
        if b < n:
            cb = c[b]
            if cb != 0.0:
                for j in range(ncol):
                    T[k, j] -= cb * T[i, j]


def _lex_less(a, b):
    for i in range(a.size):
        if a[i] < b[i]:
            return True
        if a[i] > b[i]:
            return False
    return False


_lex_less_nb = njit(cache=True, nogil=True)(_lex_less)


@njit(cache=True, nogil=True)
def _gray_x(idx, lo, hi, x):
    g = idx ^ (idx >> 1)
    for j in range(lo.size):
        if (g >> j) & 1:
            x[j] = hi[j]
        else:
            x[j] = lo[j]


@njit(cache=True, nogil=True)
def _scan_nb(T, basis, c0, Dc, lo, hi, start, stop, tol, max_iter):
    """Minimum of the dual optimum over gray-code corners ``start..stop-1``.

    Returns ``(status, best_value, best_x, evaluations)``; status 1 flags an
    unbounded dual (inner problem infeasible at some corner).
    """
    n = lo.size
    k = T.shape[0] - 2
    rhs = T.shape[1] - 1
    nc = c0.size
    x = np.empty(n)
    _gray_x(start, lo, hi, x)
    best = np.inf
    best_x = x.copy()
    c = np.empty(nc)
    evals = 0
    for idx in range(start, stop):
        if idx > start:
            g = idx ^ (idx >> 1)
            gp = (idx - 1) ^ ((idx - 1) >> 1)
            diff = g ^ gp
            j = 0
            while (diff >> j) & 1 == 0:
                j += 1
            x[j] = hi[j] if (g >> j) & 1 else lo[j]
        for t in range(nc):
            c[t] = c0[t]
        for j in range(n):
            xj = x[j]
            if xj != 0.0:
                for t in range(nc):
                    c[t] += Dc[j, t] * xj
        _reprice_nb(T, basis, c)
        status, _ = _kernels._pivot_loop_nb(T, basis, k, nc, tol, max_iter)
        evals += 1
        if status != 0:
            return status, best, x.copy(), evals
        v = -T[k, rhs]
        if v < best - TIE or (v <= best + TIE and _lex_less_nb(x, best_x)):
            best = v
            for j in range(n):
                best_x[j] = x[j]
    return 0, best, best_x, evals


def scan_py(T, basis, c0, Dc, lo, hi, start, stop, tol, max_iter):
    n = lo.size
    k = T.shape[0] - 2
    x = np.empty(n)
    best = np.inf
    best_x = None
    evals = 0
    for idx in range(start, stop):
        g = idx ^ (idx >> 1)
        bits = (g >> np.arange(n)) & 1
        x = np.where(bits == 1, hi, lo)
        c = c0 + x @ Dc
        reprice_py(T, basis, c)
        status, _ = _kernels.pivot_loop_py(T, basis, k, c.size, tol, max_iter)
        evals += 1
        if status != 0:
            return status, best, x, evals
        v = -T[k, -1]
        if best_x is None or v < best - TIE or (v <= best + TIE and _lex_less(x, best_x)):
            best = v
            best_x = x.copy()
    return 0, best, best_x, evals


def scan_min_of_affine(C, f, lo, hi, start, stop, chunk=4096):
    """No inner variables: the value is ``min_j (C x + f)_j``; vectorised scan."""
    n = lo.size
    best = np.inf
    best_x = None
    for s in range(start, stop, chunk):
        idx = np.arange(s, min(stop, s + chunk), dtype=np.int64)
        g = idx ^ (idx >> 1)
        bits = (g[:, None] >> np.arange(n)) & 1
        X = np.where(bits == 1, hi, lo)
        vals = (X @ C.T + f).min(axis=1) if C.shape[0] else np.full(len(idx), np.inf)
        cand = np.nonzero(vals <= vals.min() + TIE)[0]
        # lexicographically smallest among near-ties
        pick = cand[np.lexsort(X[cand].T[::-1])[0]]
        vi, xi = vals[pick], X[pick]
        if best_x is None or vi < best - TIE or (vi <= best + TIE and _lex_less(xi, best_x)):
            best, best_x = float(vi), xi.copy()
    return best, best_x


def reprice(T, basis, c):
    if USE_NUMBA:
        _reprice_nb(T, basis, np.ascontiguousarray(c, dtype=np.float64))
    else:
        reprice_py(T, basis, c)


def scan(T, basis, c0, Dc, lo, hi, start, stop, tol=1e-9, max_iter=10000):
    if USE_NUMBA:
        st, v, x, ev = _scan_nb(T, basis, c0, Dc, lo, hi, start, stop, tol, max_iter)
        return int(st), float(v), x, int(ev)
    return scan_py(T, basis, c0, Dc, lo, hi, start, stop, tol, max_iter)
