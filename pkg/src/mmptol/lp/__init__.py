"""Linear programming back ends behind one call signature.

``simplex`` is the bundled dense tableau solver; ``highs`` delegates to
scipy when it is installed.
"""
from __future__ import annotations

import numpy as np

from .simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, LPResult, solve_simplex

BACKENDS = ("simplex", "highs")


def _solve_highs(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None):
    from scipy.optimize import linprog

    n = len(c)
    lb = np.full(n, -np.inf) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in zip(lb, ub)]
    has_ub = A_ub is not None and np.size(A_ub) > 0
    has_eq = A_eq is not None and np.size(A_eq) > 0
    res = linprog(c, A_ub=A_ub if has_ub else None, b_ub=b_ub if has_ub else None,
                  A_eq=A_eq if has_eq else None, b_eq=b_eq if has_eq else None,
                  bounds=bounds, method="highs")
    if res.status == 0:
        return LPResult(
            OPTIMAL, x=np.asarray(res.x), fun=float(res.fun),
            ineqlin_marginals=np.asarray(res.ineqlin.marginals) if has_ub else np.zeros(0),
            eqlin_marginals=np.asarray(res.eqlin.marginals) if has_eq else np.zeros(0),
            iterations=int(res.nit),
        )
    status = {2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, ITERATION_LIMIT)
    return LPResult(status)


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None,
             backend: str = "simplex") -> LPResult:
    """Minimize ``c @ x``; see :func:`solve_simplex` for the conventions."""
    if backend == "simplex":
        return solve_simplex(c, A_ub, b_ub, A_eq, b_eq, lb, ub)
    if backend == "highs":
        return _solve_highs(c, A_ub, b_ub, A_eq, b_eq, lb, ub)
    raise ValueError(f"unknown LP backend {backend!r}; expected one of {BACKENDS}")


__all__ = [
    "BACKENDS", "INFEASIBLE", "ITERATION_LIMIT", "LPResult", "OPTIMAL", "UNBOUNDED",
    "solve_lp", "solve_simplex",
]
