"""Dense two-phase tableau simplex.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and ``lb <= x <= ub`` (infinite bounds allowed). Row marginals follow the
usual sensitivity convention: ``d fun / d b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    fun: float = np.nan
    ineqlin_marginals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eqlin_marginals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _as2d(A, n):
    if A is None:
        return np.zeros((0, n))
    A = np.asarray(A, dtype=float)
    return A.reshape(-1, n)


def _as1d(b, k):
    if b is None:
        return np.zeros(k)
    return np.asarray(b, dtype=float).reshape(k)


def solve_simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None,
                  tol: float = 1e-9, max_iter: int = 20000) -> LPResult:
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_ub = _as2d(A_ub, n)
    A_eq = _as2d(A_eq, n)
    b_ub = _as1d(b_ub, A_ub.shape[0])
    b_eq = _as1d(b_eq, A_eq.shape[0])
    lb = np.full(n, -np.inf) if lb is None else np.asarray(lb, dtype=float).ravel()
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float).ravel()
    if np.any(lb > ub):
        return LPResult(INFEASIBLE)

    # x = S @ xs + s0 with xs >= 0
    cols = []
    s0 = np.zeros(n)
    bound_rows = []
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            s0[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            s0[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ns = len(cols)
    S = np.zeros((n, ns))
    for k, (j, sgn) in enumerate(cols):
        S[j, k] = sgn

    n_ub0 = A_ub.shape[0]
    U = np.zeros((n_ub0 + len(bound_rows), ns))
    bu = np.zeros(n_ub0 + len(bound_rows))
    U[:n_ub0] = A_ub @ S
    bu[:n_ub0] = b_ub - A_ub @ s0
    for r, (k, width) in enumerate(bound_rows):
        U[n_ub0 + r, k] = 1.0
        bu[n_ub0 + r] = width
    Eq = A_eq @ S
    be = b_eq - A_eq @ s0

    m_ub = U.shape[0]
    m = m_ub + Eq.shape[0]
    n_enter = ns + m_ub
    ncol = n_enter + m
    T = np.zeros((m + 2, ncol + 1))
    T[:m_ub, :ns] = U
    T[:m_ub, ns:ns + m_ub] = np.eye(m_ub)
    T[m_ub:m, :ns] = Eq
    T[:m_ub, -1] = bu
    T[m_ub:m, -1] = be
    sign = np.where(T[:m, -1] < 0.0, -1.0, 1.0)
    T[:m] *= sign[:, None]
    T[:m, n_enter:ncol] = np.eye(m)
    T[m, :ns] = c @ S
    T[m + 1, :n_enter] = -T[:m, :n_enter].sum(axis=0)
    T[m + 1, -1] = -T[:m, -1].sum()
    basis = np.arange(n_enter, ncol, dtype=np.int64)

    status, it1 = _kernels.pivot_loop(T, basis, m + 1, n_enter, tol, max_iter)
    if status == _kernels.ITERATION_LIMIT:
        return LPResult(ITERATION_LIMIT, iterations=it1)
    scale = max(1.0, float(np.abs(T[:m, -1]).max(initial=0.0)), float(np.abs(be).max(initial=0.0)),
                float(np.abs(bu).max(initial=0.0)))
    if -T[m + 1, -1] > 1e-9 * scale:
        return LPResult(INFEASIBLE, iterations=it1)

    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n_enter:
            row = T[i, :n_enter]
            k = int(np.argmax(np.abs(row))) if n_enter else 0
            if n_enter and abs(row[k]) > tol:
                piv = T[i] / T[i, k]
                f = T[:, k].copy()
                f[i] = 0.0
                T -= np.outer(f, piv)
                T[i] = piv
                basis[i] = k

    status, it2 = _kernels.pivot_loop(T, basis, m, n_enter, tol, max_iter)
    iters = it1 + it2
    if status == _kernels.UNBOUNDED:
        return LPResult(UNBOUNDED, iterations=iters)
    if status == _kernels.ITERATION_LIMIT:
        return LPResult(ITERATION_LIMIT, iterations=iters)

    xs = np.zeros(ncol)
    xs[basis] = T[:m, -1]
    x = S @ xs[:ns] + s0
    y = -T[m, n_enter:ncol] * sign
    return LPResult(
        OPTIMAL,
        x=x,
        fun=float(c @ x),
        ineqlin_marginals=y[:n_ub0].copy(),
        eqlin_marginals=y[m_ub:].copy(),
        iterations=iters,
    )
