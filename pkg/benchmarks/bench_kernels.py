"""Numba vs pure-numpy timings for the hot kernels.

Two parts:
  kernels   calls the jitted and the python variants side by side in one process
  end-to-end  runs the enumerate and iterative solvers in child processes,
              once with MMPTOL_DISABLE_NUMBA=1 and once without

    python benchmarks/bench_kernels.py [--n 12] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from mmptol import _accel, _scan
from mmptol.lp import _kernels
from mmptol.optimizer import InnerSolver, OptimizationProblem
from mmptol.process import box_constraints
from mmptol.torsor import LinExpr


def make_problem(seed, n, p=2, m=6):
    rng = np.random.default_rng(seed)
    xs, ls = [f"x{i}" for i in range(n)], [f"l{i}" for i in range(p)]
    gaps = []
    for _ in range(m):
        t = {x: float(rng.normal()) for x in xs if rng.random() < 0.6}
        t.update({k: float(rng.normal()) for k in ls})
        gaps.append(LinExpr(t, abs(float(rng.normal())) + 1.0))
    cons = []
    for x in xs:
        cons += box_constraints(x, (-float(rng.random()) - 0.05, float(rng.random()) + 0.05), "CM")
    for k in ls:
        cons += box_constraints(k, (-1.0, 1.0), "CGP")
    return OptimizationProblem.build(gaps, cons, ls, xs + ls)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(n, repeat):
    prob = make_problem(0, n)
    s = InnerSolver(prob)
    c0 = np.concatenate([prob.f, prob.q])
    Dc = np.ascontiguousarray(np.hstack([prob.C.T, prob.Q.T]))
    lo, hi = prob.lb.astype(float), prob.ub.astype(float)
    total = 1 << n

    def scan_with(kernel):
        return lambda: kernel(s.T0.copy(), s.basis0.copy(), c0, Dc, lo, hi, 0, total, 1e-9, 10000)

    def pivot_with(kernel):
        def run():
            for _ in range(200):
                T, b = s.T0.copy(), s.basis0.copy()
                _scan.reprice_py(T, b, c0)
                kernel(T, b, s.k, s.N, 1e-9, 10000)
        return run

    rows = []
    if _accel.HAVE_NUMBA:
        scan_with(_scan._scan_nb)()  # compile outside the timing
        pivot_with(_kernels._pivot_loop_nb)()
    for name, nb, py in [(f"corner scan 2^{n}", _scan._scan_nb, _scan.scan_py),
                         ("pivot loop x200", _kernels._pivot_loop_nb, _kernels.pivot_loop_py)]:
        wrap = scan_with if name.startswith("corner") else pivot_with
        t_py = best_of(wrap(py), repeat)
        t_nb = best_of(wrap(nb), repeat) if _accel.HAVE_NUMBA else float("nan")
        rows.append((name, t_nb, t_py))
    return rows


CHILD = """
import json, sys, time
sys.path.insert(0, {path!r})
from bench_kernels import make_problem
from mmptol import _accel
from mmptol.optimizer import worst_case_enumerate, worst_case_iterative
prob = make_problem(0, {n})
out = {{"numba": _accel.USE_NUMBA}}
for name, fn in [("enumerate", worst_case_enumerate), ("iterative", lambda p: worst_case_iterative(p, seed=0))]:
    fn(prob)
    t0 = time.perf_counter()
    for _ in range({repeat}):
        r = fn(prob)
    out[name] = (time.perf_counter() - t0) / {repeat}
    out[name + "_value"] = r.value
print(json.dumps(out))
"""


def bench_end_to_end(n, repeat):
    code = CHILD.format(path=os.path.dirname(os.path.abspath(__file__)), n=n, repeat=repeat)
    res = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, MMPTOL_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        res[label] = json.loads(out.stdout)
    for solver in ("enumerate", "iterative"):
        a, b = res["numba"][solver + "_value"], res["numpy"][solver + "_value"]
        assert abs(a - b) <= 1e-9, f"{solver}: paths disagree ({a} vs {b})"
    return [(f"worst case {s}, n={n}", res["numba"][s], res["numpy"][s]) for s in ("enumerate", "iterative")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=12, help="outer parameters (corner count is 2^n)")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rows = bench_kernels(args.n, args.repeat) + bench_end_to_end(args.n, args.repeat)
    print(f"{'case':32s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speed-up':>9s}")
    for name, t_nb, t_py in rows:
        print(f"{name:32s} {t_nb:12.4f} {t_py:12.4f} {t_py / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
