import math

import numpy as np
import pytest
from scipy.optimize import linprog

from mmptol.optimizer import (BOUNDED, DIVERGENT, INFEASIBLE, GuardError, InnerUnboundedError, OptimizationProblem,
                              influence_details, inner_max_min, polytope_vertices, worst_case,
                              worst_case_enumerate, worst_case_iterative)
from mmptol.process import LinearConstraint, box_constraints
from mmptol.torsor import LinExpr
from problems import brute_force, inner_reference, random_problem


def box(*names, lo=-1.0, hi=1.0, family="CM"):
    out = []
    for n in names:
        out += box_constraints(n, (lo, hi), family)
    return out


class TestBuild:
    def test_single_variable_rows_become_bounds(self):
        p = OptimizationProblem.build([LinExpr({"a": 1.0, "b": 1.0}, 1.0)],
                                      box("a") + [LinearConstraint(LinExpr({"b": 2.0}), "<=", 1.0)])
        assert p.outer == ["a", "b"] and p.G.shape[0] == 0
        assert p.ub[1] == 0.5 and p.lb[1] == -np.inf

    def test_structural_zero(self):
        p = OptimizationProblem.build([LinExpr({"a": 1e-14, "b": 1.0}, 1.0)], box("a", "b"))
        assert "a" in p.idle and p.outer == ["b"]

    def test_order_respected(self):
        p = OptimizationProblem.build([LinExpr({"a": 1.0, "b": 1.0})], box("a", "b"), order=["b", "a"])
        assert p.outer == ["b", "a"]

    def test_inner_rows_split(self):
        p = OptimizationProblem.build([LinExpr({"a": 1.0, "l": 1.0})],
                                      box("a") + [LinearConstraint(LinExpr({"a": 1.0, "l": 1.0}), "<=", 2.0)], ["l"])
        assert p.inner == ["l"] and p.P.shape == (1, 1) and p.Q[0, 0] == -1.0


class TestInner:
    def test_matches_highs(self):
        rng = np.random.default_rng(10)
        for _ in range(60):
            prob = random_problem(rng, int(rng.integers(1, 6)), int(rng.integers(0, 4)), int(rng.integers(1, 7)))
            x = rng.uniform(prob.lb, prob.ub)
            assert inner_max_min(prob, x).value == pytest.approx(inner_reference(prob, x), abs=1e-9)

    def test_multipliers_attain_value(self):
        rng = np.random.default_rng(11)
        prob = random_problem(rng, 3, 2, 5)
        x = rng.uniform(prob.lb, prob.ub)
        r = inner_max_min(prob, x)
        gaps = prob.C @ x + prob.E @ r.lam + prob.f
        assert gaps.min() == pytest.approx(r.value, abs=1e-9)
        assert np.all(prob.P @ r.lam <= prob.q + prob.Q @ x + 1e-9)

    def test_unbounded_link_rejected(self):
        prob = OptimizationProblem.build([LinExpr({"a": 1.0, "l": 1.0}), LinExpr({"a": 1.0, "l": 2.0})],
                                         box("a"), ["l"])
        with pytest.raises(InnerUnboundedError):
            inner_max_min(prob, [0.0])


class TestOracle:
    @pytest.mark.parametrize("seed", range(6))
    def test_box_problems_against_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(8):
            prob = random_problem(rng, int(rng.integers(1, 8)), int(rng.integers(0, 3)), int(rng.integers(2, 7)))
            ref = brute_force(prob)
            assert worst_case_enumerate(prob).value == pytest.approx(ref, abs=1e-9)
            assert worst_case_iterative(prob, seed=seed).value == pytest.approx(ref, abs=1e-9)

    def test_polytope_without_links_against_linprog(self):
        """No links: the worst case is the smallest per-gap LP minimum."""
        rng = np.random.default_rng(20)
        for _ in range(20):
            prob = random_problem(rng, int(rng.integers(2, 6)), 0, int(rng.integers(2, 6)), coupled=3)
            A = prob.G
            ref = min(linprog(c, A_ub=A if A.shape[0] else None, b_ub=prob.h if A.shape[0] else None,
                              bounds=list(zip(prob.lb, prob.ub)), method="highs").fun + f0
                      for c, f0 in zip(prob.C, prob.f))
            assert worst_case_enumerate(prob).value == pytest.approx(ref, abs=1e-9)
            assert worst_case_iterative(prob).value == pytest.approx(ref, abs=1e-9)

    def test_polytope_with_links_methods_agree(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            prob = random_problem(rng, int(rng.integers(2, 6)), int(rng.integers(1, 3)), 5, coupled=2)
            a, b = worst_case_enumerate(prob), worst_case_iterative(prob)
            assert a.status == b.status == BOUNDED
            assert a.value == pytest.approx(b.value, abs=1e-9)


class TestStatuses:
    def test_divergent(self):
        prob = OptimizationProblem.build([LinExpr({"a": 1.0, "b": 1.0}, 1.0)], box("a"))
        for solver in ("enumerate", "iterative"):
            r = worst_case(prob, solver)
            assert r.status == DIVERGENT and r.value == -math.inf

    def test_unbounded_but_harmless_direction(self):
        # b only appears with a lower bound and raises the gap
        prob = OptimizationProblem.build([LinExpr({"a": 1.0, "b": 1.0}, 1.0)],
                                         box("a") + [LinearConstraint(LinExpr.var("b"), ">=", 0.0)])
        for solver in ("enumerate", "iterative"):
            r = worst_case(prob, solver)
            assert r.status == BOUNDED and r.value == pytest.approx(0.0)

    def test_outer_infeasible(self):
        prob = OptimizationProblem.build([LinExpr({"a": 1.0, "b": 1.0})],
                                         box("a", "b") + [LinearConstraint(LinExpr({"a": 1.0, "b": 1.0}), ">=", 3.0)])
        assert worst_case_enumerate(prob).status == INFEASIBLE
        assert worst_case_iterative(prob).status == INFEASIBLE

    def test_inner_infeasible_at_some_vertex(self):
        # l in [-1, 1] and l >= 1.5 a: infeasible when a = 1
        cons = box("a", lo=0.0) + box("l", family="CGP")
        cons.append(LinearConstraint(LinExpr({"l": 1.0, "a": -1.5}), ">=", 0.0))
        prob = OptimizationProblem.build([LinExpr({"a": 1.0, "l": 0.5}, 1.0)], cons, ["l"])
        assert worst_case_enumerate(prob).status == INFEASIBLE

    def test_guard(self):
        names = [f"x{i}" for i in range(21)]
        prob = OptimizationProblem.build([LinExpr({n: 1.0 for n in names})], box(*names))
        with pytest.raises(GuardError):
            worst_case_enumerate(prob)
        assert worst_case_iterative(prob).value == pytest.approx(-21.0)

    def test_no_outer_parameters(self):
        prob = OptimizationProblem.build([LinExpr({"l": 1.0}, 1.0), LinExpr({"l": -1.0}, 1.0)],
                                         box("l", family="CGP"), ["l"])
        assert worst_case_enumerate(prob).value == pytest.approx(1.0)


class TestDeterminism:
    def test_same_seed_same_answer(self):
        rng = np.random.default_rng(30)
        prob = random_problem(rng, 9, 2, 6)
        a = worst_case_iterative(prob, seed=5, starts=8)
        b = worst_case_iterative(prob, seed=5, starts=8)
        assert a == b and np.array_equal(a.x, b.x)

    def test_ties_break_lexicographically(self):
        # every corner gives the same value
        prob = OptimizationProblem.build([LinExpr({"a": 1e-13, "b": 0.0}, 1.0), LinExpr({"a": 1.0}, 5.0)],
                                         box("a", "b"))
        for r in (worst_case_enumerate(prob), worst_case_iterative(prob)):
            assert r.value == pytest.approx(1.0)
            assert r.x.tolist() == [-1.0]

    def test_threads_do_not_change_result(self):
        rng = np.random.default_rng(31)
        prob = random_problem(rng, 12, 1, 6)
        a = worst_case_enumerate(prob, workers=1)
        b = worst_case_enumerate(prob, workers=4)
        assert a.value == b.value and np.array_equal(a.x, b.x)


class TestInfluence:
    def test_single_gap_coefficients_are_slopes(self):
        prob = OptimizationProblem.build([LinExpr({"a": 3.0, "b": -0.5}, 1.0)], box("a", "b", "c")
                                         + [LinearConstraint(LinExpr({"c": 1.0, "a": 1.0}), "<=", 1.5)])
        r = worst_case_enumerate(prob)
        inf = influence_details(prob, r)
        assert inf.coefficients["a"] == pytest.approx(3.0, abs=1e-6)
        assert inf.coefficients["b"] == pytest.approx(0.5, abs=1e-6)
        assert inf.coefficients["c"] == 0.0

    def test_finite_differences_match_duals(self):
        rng = np.random.default_rng(40)
        checked = 0
        for _ in range(30):
            prob = random_problem(rng, int(rng.integers(2, 7)), int(rng.integers(0, 2)), 4, density=0.5)
            r = worst_case_enumerate(prob)
            inf = influence_details(prob, r)
            for k, c in inf.coefficients.items():
                if not inf.degenerate[k]:
                    assert c == pytest.approx(inf.dual[k], abs=1e-5)
                    checked += 1
        assert checked > 50

    def test_idle_parameters_report_zero(self):
        prob = OptimizationProblem.build([LinExpr({"a": 1.0}, 1.0)], box("a", "z"))
        r = worst_case_enumerate(prob)
        inf = influence_details(prob, r)
        assert inf.coefficients["z"] == 0.0 and inf.dual["z"] == 0.0


def test_polytope_vertices_square():
    A = np.vstack([np.eye(2), -np.eye(2)])
    b = np.ones(4)
    V = polytope_vertices(A, b)
    assert sorted(map(tuple, V.round(12))) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]
