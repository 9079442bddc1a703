"""Energy-norm convergence of the traveling Gaussian on static and characteristic meshes.

Prints one table per (p, motion) with errors, interpolant ratios and observed
orders. Usage: python scripts/convergence_study.py [--levels 4] [--p 1 2]
"""
import argparse
import dataclasses
import math
import time

from charfem import analysis, problems, solver
from charfem.mesh import DomainSpec, TimeGrid, uniform_slice
from charfem.quadrature import make_rule
from charfem.time_basis import make_time_basis


def sweep(p, motion_name, levels, n0=16, t_final=0.4, rule="gauss"):
    bench = problems.traveling_gaussian()
    bench = dataclasses.replace(bench, domain=DomainSpec(0.0, 1.0, t_final))
    r = make_rule(rule, p)
    basis = make_time_basis("coincident", r)
    problem = bench.problem.with_bounds(bench.domain)
    motion = problems.named_motion(motion_name, bench)
    rows = []
    for lvl in range(levels):
        n = n0 * 2 ** lvl
        sol = solver.run(uniform_slice(bench.domain, n), TimeGrid.uniform(t_final, n // 2),
                         problem, motion, r, basis)
        rows.append((n, analysis.error_report(sol, problem)))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--levels", type=int, default=4)
    parser.add_argument("--p", type=int, nargs="+", default=[1, 2])
    parser.add_argument("--motions", nargs="+", default=["static", "characteristics"])
    args = parser.parse_args()
    for p in args.p:
        for motion in args.motions:
            start = time.perf_counter()
            rows = sweep(p, motion, args.levels)
            print(f"\np={p} motion={motion} ({time.perf_counter() - start:.1f}s)")
            print(f"{'n':>5} {'energy err':>12} {'ratio':>7} {'order':>6}")
            prev = None
            for n, rep in rows:
                order = "" if prev is None else f"{math.log2(prev / rep.energy_error):6.2f}"
                print(f"{n:5d} {rep.energy_error:12.4e} {rep.quasi_optimality_ratio:7.3f} {order:>6}")
                prev = rep.energy_error


if __name__ == "__main__":
    main()
