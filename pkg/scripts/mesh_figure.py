"""Plot node trajectories of a moving mesh, or dump them as CSV without matplotlib.

Usage: python scripts/mesh_figure.py --motion characteristics --out mesh.png
"""
import argparse
import csv
import sys

from charfem import problems, solver
from charfem.mesh import TimeGrid, snapshot_rows, uniform_slice
from charfem.quadrature import make_rule
from charfem.time_basis import make_time_basis


def trajectories(motion_name, n, m, p, benchmark="traveling_gaussian"):
    bench = problems.get_benchmark(benchmark)
    rule = make_rule("gauss", p)
    basis = make_time_basis("coincident", rule)
    grid = TimeGrid.uniform(bench.domain.t_final, m)
    parts = solver.build_mesh_sequence(uniform_slice(bench.domain, n), grid,
                                       problems.named_motion(motion_name, bench), rule, basis)
    return [snapshot_rows(part, 20) for part in parts]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--motion", default="characteristics")
    parser.add_argument("--elements", type=int, default=20)
    parser.add_argument("--partitions", type=int, default=10)
    parser.add_argument("--p", type=int, default=2)
    parser.add_argument("--out", default="mesh.png")
    args = parser.parse_args()
    tables = trajectories(args.motion, args.elements, args.partitions, args.p)
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        writer = csv.writer(sys.stdout)
        writer.writerow(("partition", "t", "node", "x"))
        for i, tab in enumerate(tables, start=1):
            for row in tab:
                for k, x in enumerate(row[1:]):
                    writer.writerow((i, repr(row[0]), k, repr(x)))
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    for tab in tables:
        ax.plot(tab[:, 1:], tab[:, 0], color="k", lw=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title(f"{args.motion} mesh, {args.elements} elements")
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
