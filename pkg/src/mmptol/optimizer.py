"""Worst-case min-max search over defect parameters.

The inner value ``V(x) = max_{s, lam} s`` subject to ``s <= C x + E lam + f``
and ``P lam <= q + Q x`` is concave in the outer parameters ``x``. It is
evaluated through its dual, whose feasible set ``D`` does not depend on
``x``: after one phase-1 solve every outer point costs a re-pricing and a
few warm-started pivots.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _scan
from ._accel import USE_NUMBA
from .lp import _kernels, solve_lp
from .process import LinearConstraint
from .torsor import LinExpr

log = logging.getLogger(__name__)

BOUNDED = "BOUNDED"
DIVERGENT = "DIVERGENT"
INFEASIBLE = "INFEASIBLE"

STRUCTURAL_ZERO = 1e-12
FEAS_TOL = 1e-9
TIE = _scan.TIE
DIMENSION_GUARD = 20
VERTEX_COMBINATIONS = 200_000
DUAL_COMBINATIONS = 20_000
DUAL_VERTICES = 4096
REFACTOR_EVERY = 1024


class GuardError(ValueError):
    pass


class InnerUnboundedError(ValueError):
    pass


# --- problem -----------------------------------------------------------------

@dataclass
class OptimizationProblem:
    """Dense form of a nested worst-case problem.

    Outer: ``lb <= x <= ub``, ``G x <= h``. Inner: ``P lam <= q + Q x``.
    Gaps: ``C x + E lam + f``. Outer parameters that appear nowhere but in
    their own bounds are set aside in ``idle`` with a fixed feasible value.
    """

    outer: list[str]
    inner: list[str]
    C: np.ndarray
    E: np.ndarray
    f: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    G: np.ndarray
    h: np.ndarray
    P: np.ndarray
    q: np.ndarray
    Q: np.ndarray
    gap_labels: list[str] = field(default_factory=list)
    idle: dict[str, float] = field(default_factory=dict)
    infeasible: str | None = None

    @property
    def n(self) -> int:
        return len(self.outer)

    @property
    def is_box(self) -> bool:
        return self.G.shape[0] == 0 and bool(np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub)))

    @classmethod
    def build(cls, gaps: Sequence[LinExpr], constraints: Iterable[LinearConstraint] = (),
              inner: Iterable[str] = (), order: Sequence[str] | None = None,
              labels: Sequence[str] | None = None) -> "OptimizationProblem":
        gaps = list(gaps)
        constraints = list(constraints)
        inner_set = set(inner)
        names = set()
        for g in gaps:
            names |= g.params()
        for c in constraints:
            names |= c.params()
        rank = {p: i for i, p in enumerate(order or ())}
        key = lambda p: (rank.get(p, len(rank)), p)  # noqa: E731
        inner_l = sorted(names & inner_set, key=key)
        outer_l = sorted(names - inner_set, key=key)
        oi = {p: i for i, p in enumerate(outer_l)}
        ii = {p: i for i, p in enumerate(inner_l)}
        n, p = len(outer_l), len(inner_l)

        def split(e: LinExpr):
            xo, xi = np.zeros(n), np.zeros(p)
            for k, v in e.terms.items():
                if abs(v) < STRUCTURAL_ZERO:
                    continue
                if k in ii:
                    xi[ii[k]] = v
                else:
                    xo[oi[k]] = v
            return xo, xi

        lb, ub = np.full(n, -np.inf), np.full(n, np.inf)
        G, h, P, q, Q = [], [], [], [], []
        infeasible = None
        for c in constraints:
            e, b = c.as_le()
            xo, xi = split(e)
            if np.any(xi):
                P.append(xi)
                q.append(b)
                Q.append(-xo)
                continue
            nz = np.nonzero(xo)[0]
            if nz.size == 0:
                if b < -FEAS_TOL:
                    infeasible = f"constraint {c.label or c.expr!r} cannot hold"
                continue
            if nz.size == 1:
                j = nz[0]
                a = xo[j]
                if a > 0:
                    ub[j] = min(ub[j], b / a)
                else:
                    lb[j] = max(lb[j], b / a)
                continue
            G.append(xo)
            h.append(b)
        m = len(gaps)
        C, E, f = np.zeros((m, n)), np.zeros((m, p)), np.zeros(m)
        for r, g in enumerate(gaps):
            C[r], E[r] = split(g)
            f[r] = g.constant
        G = np.array(G, dtype=float).reshape(len(G), n)
        P = np.array(P, dtype=float).reshape(len(P), p)
        Q = np.array(Q, dtype=float).reshape(len(Q), n)
        prob = cls(outer_l, inner_l, C, E, f, lb, ub, G, np.array(h, dtype=float),
                   P, np.array(q, dtype=float), Q,
                   list(labels) if labels is not None else [f"gap {i}" for i in range(m)],
                   {}, infeasible)
        if np.any(lb > ub + FEAS_TOL):
            j = int(np.argmax(lb - ub))
            prob.infeasible = f"bounds of {outer_l[j]} are empty"
        return prob._drop_idle()

    def _drop_idle(self) -> "OptimizationProblem":
        used = (np.any(self.C != 0, axis=0) | np.any(self.G != 0, axis=0) | np.any(self.Q != 0, axis=0))
        if used.all():
            return self
        keep = np.nonzero(used)[0]
        idle = dict(self.idle)
        for j in np.nonzero(~used)[0]:
            idle[self.outer[j]] = float(np.clip(0.0, self.lb[j], self.ub[j]))
        return OptimizationProblem(
            [self.outer[j] for j in keep], self.inner, self.C[:, keep], self.E, self.f,
            self.lb[keep], self.ub[keep], self.G[:, keep], self.h, self.P, self.q, self.Q[:, keep],
            self.gap_labels, idle, self.infeasible)

    def with_constraints(self, lb=None, ub=None, f=None) -> "OptimizationProblem":
        """Copy with replaced bounds or gap constants (used by sweeps)."""
        return OptimizationProblem(
            self.outer, self.inner, self.C, self.E, self.f if f is None else np.asarray(f, dtype=float),
            self.lb if lb is None else np.asarray(lb, dtype=float),
            self.ub if ub is None else np.asarray(ub, dtype=float),
            self.G, self.h, self.P, self.q, self.Q, self.gap_labels, self.idle, self.infeasible)


# --- inner problem -------------------------------------------------------------

@dataclass
class InnerResult:
    value: float
    lam: np.ndarray | None
    y: np.ndarray | None
    z: np.ndarray | None
    status: str = BOUNDED

    def supergradient(self, prob: OptimizationProblem) -> np.ndarray:
        return prob.C.T @ self.y + prob.Q.T @ self.z


class InnerSolver:
    """Dual tableau of the inner problem, warm-started across outer points.

    Dual: ``min (C x + f) . y + (q + Q x) . z`` over ``y, z >= 0`` with
    ``sum(y) = 1`` and ``-E^T y + P^T z = 0``.
    """

    def __init__(self, prob: OptimizationProblem, tol: float = 1e-9, max_iter: int = 10000):
        self.prob = prob
        self.tol = tol
        self.max_iter = max_iter
        m, r, p = prob.C.shape[0], prob.P.shape[0], len(prob.inner)
        if m == 0:
            raise ValueError("problem has no gap expressions")
        k = 1 + p
        N = m + r
        A = np.zeros((k, N))
        A[0, :m] = 1.0
        A[1:, :m] = -prob.E.T
        A[1:, m:] = prob.P.T
        b = np.zeros(k)
        b[0] = 1.0
        self.A, self.b, self.k, self.N = A, b, k, N
        T = np.zeros((k + 2, N + k + 1))
        T[:k, :N] = A
        T[:k, N:N + k] = np.eye(k)
        T[:k, -1] = b
        T[k + 1, :N] = -A.sum(axis=0)
        T[k + 1, -1] = -b.sum()
        basis = np.arange(N, N + k, dtype=np.int64)
        status, _ = _kernels.pivot_loop(T, basis, k + 1, N, tol, max_iter)
        if status != _kernels.OPTIMAL or -T[k + 1, -1] > tol:
            raise InnerUnboundedError(
                "inner problem is unbounded or infeasible for every outer assignment; "
                "assembly constraints must bound the gauge mobility")
        for i in range(k):
            if basis[i] >= N:
                row = T[i, :N]
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > tol:
                    piv = T[i] / T[i, j]
                    fcol = T[:, j].copy()
                    fcol[i] = 0.0
                    T -= np.outer(fcol, piv)
                    T[i] = piv
                    basis[i] = j
        self.T0, self.basis0 = T, basis
        self.T, self.basis = T.copy(), basis.copy()
        self.solves = 0

    def copy(self) -> "InnerSolver":
        out = object.__new__(InnerSolver)
        out.__dict__.update(self.__dict__)
        out.T, out.basis = self.T0.copy(), self.basis0.copy()
        out.solves = 0
        return out

    def refactor(self):
        """Rebuild the tableau body from the original rows for the current basis."""
        k = self.k
        full = np.hstack([self.A, np.eye(k), self.b[:, None]])
        B = full[:, self.basis]
        try:
            self.T[:k] = np.linalg.solve(B, full)
        except np.linalg.LinAlgError:
            self.T, self.basis = self.T0.copy(), self.basis0.copy()

    def costs(self, x, homogeneous: bool = False) -> np.ndarray:
        prob = self.prob
        a = prob.C @ x
        bq = prob.Q @ x
        if not homogeneous:
            a = a + prob.f
            bq = bq + prob.q
        return np.concatenate([a, bq])

    def solve_costs(self, c) -> InnerResult:
        self.solves += 1
        if self.solves % REFACTOR_EVERY == 0:
            self.refactor()
        _scan.reprice(self.T, self.basis, c)
        status, _ = _kernels.pivot_loop(self.T, self.basis, self.k, self.N, self.tol, self.max_iter)
        if status == _kernels.UNBOUNDED:
            return InnerResult(-np.inf, None, None, None, INFEASIBLE)
        if status != _kernels.OPTIMAL:
            self.T, self.basis = self.T0.copy(), self.basis0.copy()
            raise RuntimeError("inner LP hit its iteration limit")
        k, N = self.k, self.N
        w = np.zeros(N)
        in_b = self.basis < N
        w[self.basis[in_b]] = self.T[:k, -1][in_b]
        np.maximum(w, 0.0, out=w)
        cb = np.where(in_b, c[np.minimum(self.basis, N - 1)], 0.0)
        pi = cb @ self.T[:k, N:N + k]
        m = self.prob.C.shape[0]
        return InnerResult(float(-self.T[k, -1]), pi[1:].copy(), w[:m], w[m:])

    def solve(self, x) -> InnerResult:
        return self.solve_costs(self.costs(np.asarray(x, dtype=float)))

    def recession(self, d) -> float:
        """Recession value ``V_inf(d)`` of the inner value along ``d``."""
        return self.solve_costs(self.costs(np.asarray(d, dtype=float), homogeneous=True)).value


def inner_max_min(prob: OptimizationProblem, x, solver: InnerSolver | None = None) -> InnerResult:
    """Inner optimum ``max_lam min_j gap_j`` at outer point ``x``."""
    solver = solver or InnerSolver(prob)
    x = np.asarray(x, dtype=float).reshape(prob.n)
    return solver.solve(x)


# --- results -----------------------------------------------------------------

@dataclass
class WorstCaseResult:
    status: str
    value: float
    outer: dict[str, float] = field(default_factory=dict)
    inner: dict[str, float] = field(default_factory=dict)
    method: str = ""
    converged: bool = True
    evaluations: int = 0
    message: str = ""
    x: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {"status": self.status, "value": self.value, "outer": dict(self.outer),
                "inner": dict(self.inner), "method": self.method, "converged": self.converged,
                "message": self.message}


def _result(prob: OptimizationProblem, status: str, value: float, x=None, inner: InnerResult | None = None,
            method: str = "", converged: bool = True, evaluations: int = 0, message: str = "") -> WorstCaseResult:
    outer = {}
    if x is not None:
        outer = {name: float(v) for name, v in zip(prob.outer, x)}
        outer.update(prob.idle)
    lam = {}
    if inner is not None and inner.lam is not None:
        lam = {name: float(v) for name, v in zip(prob.inner, inner.lam)}
    return WorstCaseResult(status, float(value), outer, lam, method, converged, evaluations, message,
                           None if x is None else np.asarray(x, dtype=float))


def _lex_better(v, x, best_v, best_x) -> bool:
    if best_x is None or v < best_v - TIE:
        return True
    return v <= best_v + TIE and _scan._lex_less(np.asarray(x), np.asarray(best_x))


# --- outer feasible set ----------------------------------------------------------

def _outer_lp(prob: OptimizationProblem, c):
    return solve_lp(c, prob.G if prob.G.shape[0] else None, prob.h if prob.G.shape[0] else None,
                    lb=prob.lb, ub=prob.ub)


def _preflight(prob: OptimizationProblem, method: str):
    if prob.infeasible:
        return _result(prob, INFEASIBLE, math.nan, method=method, message=prob.infeasible)
    if prob.n == 0:
        solver = InnerSolver(prob)
        r = solver.solve(np.zeros(0))
        if r.status == INFEASIBLE:
            return _result(prob, INFEASIBLE, math.nan, method=method, message="gauge assembly infeasible")
        return _result(prob, BOUNDED, r.value, np.zeros(0), r, method, evaluations=1)
    feas = _outer_lp(prob, np.zeros(prob.n))
    if feas.status != "optimal":
        return _result(prob, INFEASIBLE, math.nan, method=method, message="outer constraints are infeasible")
    return None


def _independent_rows(A, tol=1e-10):
    rows, basis = [], []
    for i, a in enumerate(A):
        r = a.astype(float).copy()
        for q in basis:
            r -= (q @ r) * q
        nrm = np.linalg.norm(r)
        if nrm > tol * max(1.0, np.linalg.norm(a)):
            basis.append(r / nrm)
            rows.append(i)
    return rows


def dual_vertices(solver: InnerSolver, combination_cap: int = DUAL_COMBINATIONS,
                  vertex_cap: int = DUAL_VERTICES):
    """Vertices of the dual feasible set; ``(list of w, complete)``."""
    A, b = solver.A, solver.b
    rows = _independent_rows(A)
    A, b = A[rows], b[rows]
    k, N = A.shape
    if math.comb(N, k) > combination_cap:
        return [], False
    out, seen = [], set()
    for S in itertools.combinations(range(N), k):
        B = A[:, S]
        try:
            w_s = np.linalg.solve(B, b)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(w_s)) or np.any(w_s < -1e-12) or np.abs(B @ w_s - b).max() > 1e-9:
            continue
        w = np.zeros(N)
        w[list(S)] = np.maximum(w_s, 0.0)
        key = tuple(np.round(w, 12))
        if key in seen:
            continue
        seen.add(key)
        out.append(w)
        if len(out) >= vertex_cap:
            return out, False
    return out, True


def polytope_vertices(Ain, bin_, Aeq=None, beq=None, guard: int = VERTEX_COMBINATIONS):
    """Vertices of ``{x : Ain x <= bin, Aeq x = beq}`` by active-set combinations."""
    n = Ain.shape[1]
    Aeq = np.zeros((0, n)) if Aeq is None else Aeq
    beq = np.zeros(0) if beq is None else beq
    need = n - Aeq.shape[0]
    M = Ain.shape[0]
    if need < 0 or need > M:
        return np.zeros((0, n))
    if math.comb(M, need) > guard:
        raise GuardError(f"vertex enumeration needs {math.comb(M, need)} active sets (guard {guard})")
    scale = 1.0 + np.abs(bin_).max(initial=0.0)
    out, seen = [], set()
    for S in itertools.combinations(range(M), need):
        A = np.vstack([Ain[list(S)], Aeq])
        rhs = np.concatenate([bin_[list(S)], beq])
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            continue
        x = np.linalg.solve(A, rhs)
        if np.all(Ain @ x <= bin_ + FEAS_TOL * scale):
            key = tuple(np.round(x, 9))
            if key not in seen:
                seen.add(key)
                out.append(x)
    return np.array(out).reshape(-1, n)


def _inequalities(prob: OptimizationProblem):
    n = prob.n
    rows, rhs = [prob.G], [prob.h]
    I = np.eye(n)
    fin_u = np.isfinite(prob.ub)
    fin_l = np.isfinite(prob.lb)
    rows += [I[fin_u], -I[fin_l]]
    rhs += [prob.ub[fin_u], -prob.lb[fin_l]]
    return np.vstack(rows), np.concatenate(rhs)


def _lineality(Ain) -> np.ndarray:
    n = Ain.shape[1]
    if Ain.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(Ain)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0] if s.size else 1.0)))
    return vt[rank:]


def _ray_certificates(prob: OptimizationProblem, solver: InnerSolver, verts):
    """Minimise each dual-vertex affine minorant over the outer set.

    Returns ``(divergent, [(value, x, w)])``; an unbounded minorant certifies
    that the worst case diverges.
    """
    m = prob.C.shape[0]
    out = []
    for w in verts:
        y, z = w[:m], w[m:]
        u = prob.C.T @ y + prob.Q.T @ z
        beta = float(prob.f @ y + prob.q @ z)
        res = _outer_lp(prob, u)
        if res.status == "unbounded":
            return True, out
        if res.status != "optimal":
            continue
        out.append((float(u @ res.x) + beta, res.x, w))
    return False, out


# --- enumeration oracle ------------------------------------------------------------

def _box_scan(prob: OptimizationProblem, solver: InnerSolver, workers: int):
    n = prob.n
    total = 1 << n
    lo, hi = prob.lb.astype(float), prob.ub.astype(float)
    if prob.E.shape[1] == 0 and prob.P.shape[0] == 0 and not USE_NUMBA:
        v, x = _scan.scan_min_of_affine(prob.C, prob.f, lo, hi, 0, total)
        return 0, v, x, total
    c0 = np.concatenate([prob.f, prob.q])
    Dc = np.ascontiguousarray(np.hstack([prob.C.T, prob.Q.T]))
    chunk = REFACTOR_EVERY
    ranges = [(s, min(total, s + chunk)) for s in range(0, total, chunk)]

    def run(span):
        worker = solver.copy()
        st, v, x, ev = _scan.scan(worker.T, worker.basis, c0, Dc, lo, hi, span[0], span[1],
                                  solver.tol, solver.max_iter)
        return st, v, np.asarray(x, dtype=float), ev

    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, ranges))
    else:
        parts = [run(r) for r in ranges]
    best_v, best_x, evals = np.inf, None, 0
    for st, v, x, ev in parts:
        evals += ev
        if st != 0:
            return st, -np.inf, x, evals
        if _lex_better(v, x, best_v, best_x):
            best_v, best_x = v, x
    return 0, best_v, best_x, evals


def worst_case_enumerate(prob: OptimizationProblem, guard: int = DIMENSION_GUARD,
                         workers: int = 1) -> WorstCaseResult:
    """Exhaustive oracle: the concave inner value is minimised at a vertex."""
    method = "enumerate"
    pre = _preflight(prob, method)
    if pre is not None:
        return pre
    if prob.n > guard:
        raise GuardError(f"{prob.n} outer parameters exceed the enumeration guard of {guard}")
    solver = InnerSolver(prob)
    if prob.is_box:
        st, v, x, evals = _box_scan(prob, solver, workers)
        if st != 0:
            return _result(prob, INFEASIBLE, math.nan, x, method=method, evaluations=evals,
                           message="gauge assembly infeasible at an outer vertex")
    else:
        verts, complete = dual_vertices(solver)
        if not complete:
            raise GuardError("dual vertex enumeration exceeds its cap; the ray check is not exact")
        divergent, _ = _ray_certificates(prob, solver, verts)
        if divergent:
            return _result(prob, DIVERGENT, -math.inf, method=method,
                           message="outer set is unbounded along a direction that decreases the worst case")
        Ain, bin_ = _inequalities(prob)
        L = _lineality(Ain)
        X = polytope_vertices(Ain, bin_, L if L.shape[0] else None, np.zeros(L.shape[0]) if L.shape[0] else None)
        if X.shape[0] == 0:
            return _result(prob, INFEASIBLE, math.nan, method=method, message="outer set has no vertex")
        v, x, evals = np.inf, None, 0
        for xv in X:
            r = solver.solve(xv)
            evals += 1
            if r.status == INFEASIBLE:
                return _result(prob, INFEASIBLE, math.nan, xv, method=method, evaluations=evals,
                               message="gauge assembly infeasible at an outer vertex")
            if _lex_better(r.value, xv, v, x):
                v, x = r.value, xv
    final = solver.copy().solve(x)
    return _result(prob, BOUNDED, final.value, x, final, method, evaluations=evals)


# --- iterative search --------------------------------------------------------------

def _random_start(prob: OptimizationProblem, rng: np.random.Generator):
    if prob.is_box:
        bits = rng.integers(0, 2, prob.n)
        return np.where(bits == 1, prob.ub, prob.lb).astype(float)
    res = _outer_lp(prob, rng.standard_normal(prob.n))
    return res.x if res.status == "optimal" else None


def _descend(prob: OptimizationProblem, solver: InnerSolver, x0, max_iter: int):
    """Alternate supergradient LP steps and single-coordinate flips."""
    x = np.asarray(x0, dtype=float)
    r = solver.solve(x)
    evals = 1
    if r.status == INFEASIBLE:
        return INFEASIBLE, -np.inf, x, r, evals, True
    for _ in range(max_iter):
        u = r.supergradient(prob)
        step = _outer_lp(prob, u)
        if step.status == "unbounded":
            return DIVERGENT, -np.inf, x, r, evals, True
        if step.status == "optimal":
            r2 = solver.solve(step.x)
            evals += 1
            if r2.status == INFEASIBLE:
                return INFEASIBLE, -np.inf, step.x, r2, evals, True
            if r2.value < r.value - TIE:
                x, r = step.x, r2
                continue
        if not prob.is_box:
            return BOUNDED, r.value, x, r, evals, True
        best = None
        for j in range(prob.n):
            xf = x.copy()
            xf[j] = prob.lb[j] if x[j] >= prob.ub[j] - TIE else prob.ub[j]
            rf = solver.solve(xf)
            evals += 1
            if rf.status == INFEASIBLE:
                return INFEASIBLE, -np.inf, xf, rf, evals, True
            if rf.value < r.value - TIE and (best is None or rf.value < best[1].value):
                best = (xf, rf)
        if best is None:
            return BOUNDED, r.value, x, r, evals, True
        x, r = best
    return BOUNDED, r.value, x, r, evals, False


def worst_case_iterative(prob: OptimizationProblem, starts: int = 16, seed: int = 0,
                         workers: int = 1, max_iter: int = 200) -> WorstCaseResult:
    """Multi-start descent over outer vertices.

    Starts are the minimisers of the dual-vertex minorants (when the dual set
    is small enough to list, this alone makes the search exact) followed by
    ``starts`` random outer vertices drawn from ``seed``.
    """
    method = "iterative"
    pre = _preflight(prob, method)
    if pre is not None:
        return pre
    solver = InnerSolver(prob)
    verts, complete = dual_vertices(solver)
    divergent, certs = _ray_certificates(prob, solver, verts)
    if divergent:
        return _result(prob, DIVERGENT, -math.inf, method=method,
                       message="outer set is unbounded along a direction that decreases the worst case")
    rng = np.random.default_rng(seed)
    seeds = [x for _, x, _ in sorted(certs, key=lambda t: t[0])]
    for _ in range(starts):
        x = _random_start(prob, rng)
        if x is not None:
            seeds.append(x)

    def run(x0):
        return _descend(prob, solver.copy(), x0, max_iter)

    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(workers) as ex:
            runs = list(ex.map(run, seeds))
    else:
        runs = [run(s) for s in seeds]
    best, evals, converged = None, 0, True
    for status, v, x, r, ev, conv in runs:
        evals += ev
        converged &= conv
        if status == DIVERGENT:
            return _result(prob, DIVERGENT, -math.inf, method=method, evaluations=evals,
                           message="outer set is unbounded along a direction that decreases the worst case")
        if status == INFEASIBLE:
            return _result(prob, INFEASIBLE, math.nan, x, method=method, evaluations=evals,
                           message="gauge assembly infeasible at an outer point")
        if best is None or _lex_better(v, x, best[0], best[1]):
            best = (v, x, r)
    if not converged:
        log.warning("iterative search hit its iteration cap; returning the best point found")
    v, x, r = best
    return _result(prob, BOUNDED, v, x, r, method, converged, evals,
                   "" if complete else "dual vertex list truncated; result is a local worst case")


SOLVERS = {"enumerate": worst_case_enumerate, "iterative": worst_case_iterative}


def worst_case(prob: OptimizationProblem, solver: str = "iterative", **kw) -> WorstCaseResult:
    try:
        fn = SOLVERS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; expected one of {sorted(SOLVERS)}") from None
    return fn(prob, **kw)


# --- influence -------------------------------------------------------------------

@dataclass
class Influence:
    coefficients: dict[str, float]
    dual: dict[str, float]
    degenerate: dict[str, bool]


def influence_details(prob: OptimizationProblem, result: WorstCaseResult, h: float = 1e-7,
                      threshold: float = 1e-9) -> Influence:
    """Finite-difference and dual-based sensitivities of the worst case."""
    if result.status != BOUNDED or result.x is None:
        raise ValueError("influence coefficients need a BOUNDED result")
    solver = InnerSolver(prob)
    x = result.x
    base = solver.solve(x)
    u = base.supergradient(prob)
    coeffs, dual, degen = {}, {}, {}
    for j, name in enumerate(prob.outer):
        if not (np.any(prob.C[:, j]) or np.any(prob.Q[:, j])):
            coeffs[name], dual[name], degen[name] = 0.0, 0.0, False
            continue
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        fwd = (solver.solve(xp).value - base.value) / h
        bwd = (base.value - solver.solve(xm).value) / h
        kink = abs(fwd - bwd) > 1e-6 * max(1.0, abs(fwd), abs(bwd))
        g = max(abs(fwd), abs(bwd)) if kink else abs(0.5 * (fwd + bwd))
        coeffs[name] = g if g >= threshold else 0.0
        dual[name] = abs(float(u[j])) if abs(u[j]) >= threshold else 0.0
        degen[name] = kink
    for name in prob.idle:
        coeffs[name], dual[name], degen[name] = 0.0, 0.0, False
    return Influence(coeffs, dual, degen)


def influence_coefficients(prob: OptimizationProblem, result: WorstCaseResult, h: float = 1e-7,
                           threshold: float = 1e-9) -> dict[str, float]:
    return influence_details(prob, result, h, threshold).coefficients


def constrained_worst_case(gaps: Sequence[LinExpr], constraints: Iterable[LinearConstraint],
                           inner: Iterable[str] = (), order: Sequence[str] | None = None,
                           solver: str = "iterative", labels: Sequence[str] | None = None,
                           **kw) -> tuple[WorstCaseResult, OptimizationProblem]:
    """Worst case over an outer set enlarged with manufacturing-gauge links.

    Manufacturing gap constraints and their link parameters are simply part
    of ``constraints``; unbounded decreasing directions report DIVERGENT.
    """
    prob = OptimizationProblem.build(gaps, constraints, inner, order, labels)
    return worst_case(prob, solver, **kw), prob


def assignment_feasible(prob: OptimizationProblem, x, tol: float = FEAS_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    ok = np.all(x >= prob.lb - tol) and np.all(x <= prob.ub + tol)
    if prob.G.shape[0]:
        ok &= bool(np.all(prob.G @ x <= prob.h + tol * (1 + np.abs(prob.h))))
    return bool(ok)


def as_vector(prob: OptimizationProblem, assignment: Mapping[str, float]) -> np.ndarray:
    return np.array([assignment.get(p, 0.0) for p in prob.outer], dtype=float)
