"""Command-line harness: single runs, convergence sweeps and mesh plots.

Usage::

    charfem run --benchmark traveling_gaussian --p 2 --elements 32 --partitions 16
    charfem convergence --benchmark traveling_gaussian --p 1 --levels 4
    charfem inspect-mesh --motion characteristics --p 2

Settings may also come from an INI-style file (``--config``); any flag given
on the command line wins over the file. ``CHARFEM_OUT`` overrides ``--out``.
Exit status is 0 on success, 2 when the solver fails and 3 on a bad config.
"""
import argparse
import configparser
import dataclasses
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import analysis, problems, solver
from .mesh import DegenerateMeshError, TimeGrid, snapshot_rows, uniform_slice
from .quadrature import QuadratureError, make_rule
from .time_basis import make_time_basis

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    benchmark: str = "traveling_gaussian"
    p: int = 1
    rule: str = "gauss"
    basis: str = "coincident"
    elements: int = 16
    partitions: int = 8
    levels: int = 1
    motion: str = "characteristics"
    reconfigure: str = "keep"
    dt_ceiling: Optional[float] = None
    out: str = "charfem_out"
    seed: int = 0
    threads: int = 1

    def validate(self):
        if self.benchmark not in problems.benchmark_names():
            raise ConfigError(f"unknown benchmark {self.benchmark!r}")
        if self.levels < 1 or self.elements < 1 or self.partitions < 1 or self.threads < 1:
            raise ConfigError("levels, elements, partitions and threads must be >= 1")
        if self.basis not in ("coincident", "equispaced"):
            raise ConfigError(f"unknown basis policy {self.basis!r}")
        if self.reconfigure not in ("keep", "uniform"):
            raise ConfigError(f"unknown reconfiguration {self.reconfigure!r}")
        try:
            make_rule(self.rule, self.p)
        except QuadratureError as err:
            raise ConfigError(str(err)) from err
        try:
            problems.named_motion(self.motion, self.bench())
        except (ValueError, TypeError) as err:
            raise ConfigError(str(err)) from err
        return self

    def bench(self):
        params = {"p": self.p} if self.benchmark.startswith("poly_") else {}
        try:
            return problems.get_benchmark(self.benchmark, **params)
        except (KeyError, ValueError) as err:
            raise ConfigError(str(err)) from err


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _convert(key, value):
    kind = _FIELD_TYPES[key]
    try:
        if kind in (int, "int"):
            return int(value)
        if key == "dt_ceiling":
            return None if value in (None, "", "none") else float(value)
        return str(value)
    except ValueError as err:
        raise ConfigError(f"bad value for {key}: {value!r}") from err


def read_config(path):
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    values = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            key = key.replace("-", "_")
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            values[key] = _convert(key, value)
    return values


def build_config(args):
    values = read_config(args.config) if args.config else {}
    for key in _FIELD_TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _convert(key, flag)
    if os.environ.get("CHARFEM_OUT"):
        values["out"] = os.environ["CHARFEM_OUT"]
    return RunConfig(**values).validate()


def _fmt(value):
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ""
    if isinstance(value, (int, np.integer)) or isinstance(value, str):
        return str(value)
    return "%.17g" % value


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _write_all(out, files):
    """Write every file via a temporary name and rename, after all content exists."""
    os.makedirs(out, exist_ok=True)
    tmp = []
    for name, text in files.items():
        path = os.path.join(out, name)
        with open(path + ".tmp", "w", newline="") as fh:
            fh.write(text)
        tmp.append(path)
    for path in tmp:
        os.replace(path + ".tmp", path)


def _setup(cfg, n, m):
    bench = cfg.bench()
    rule = make_rule(cfg.rule, cfg.p)
    basis = make_time_basis(cfg.basis, rule)
    motion = problems.named_motion(cfg.motion, bench)
    reconf = ("uniform", n) if cfg.reconfigure == "uniform" else None
    grid = TimeGrid.uniform(bench.domain.t_final, m)
    return bench, rule, basis, motion, reconf, grid


def solve_level(cfg, n, m):
    bench, rule, basis, motion, reconf, grid = _setup(cfg, n, m)
    problem = bench.problem.with_bounds(bench.domain, seed=cfg.seed)
    sol = solver.run(uniform_slice(bench.domain, n), grid, problem, motion, rule, basis,
                     reconfiguration=reconf, dt_ceiling=cfg.dt_ceiling, estimate_condition=True)
    report = analysis.error_report(sol, problem) if problem.exact is not None else None
    return sol, report


def _failure(cfg, err):
    index = getattr(err, "index", "")
    _write_all(cfg.out, {"failure.txt": f"partition,{index}\ncause,{err}\n"})
    print(f"solver failure: {err}", file=sys.stderr)
    return EXIT_SOLVER


def run_single(cfg):
    try:
        sol, report = solve_level(cfg, cfg.elements, cfg.partitions)
    except solver.SolverError as err:
        return _failure(cfg, err)
    files = {
        "solution.csv": _csv(("t", "x", "u"), solver.snapshot_rows(sol)),
        "steps.csv": _csv(solver.StepReport.header, solver.report_rows(sol)),
    }
    if report is not None:
        files["errors.csv"] = _csv(analysis.ErrorReport.header, [report.row()])
        print(f"energy error {report.energy_error:.6e}  "
              f"interpolant {report.interpolant_energy_error:.6e}  "
              f"ratio {report.quasi_optimality_ratio:.4f}")
    _write_all(cfg.out, files)
    return EXIT_OK


CONVERGENCE_HEADER = ("level", "h", "dt", "energy_err", "max_l2", "h1_term", "neg_term",
                      "interp_energy_err", "ratio", "observed_order")


def convergence_rows(cfg):
    bench = cfg.bench()
    levels = [(lvl, cfg.elements * 2 ** lvl, cfg.partitions * 2 ** lvl)
              for lvl in range(cfg.levels)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            reports = list(pool.map(lambda lv: solve_level(cfg, lv[1], lv[2])[1], levels))
    else:
        reports = [solve_level(cfg, n, m)[1] for _, n, m in levels]
    rows = []
    for k, ((lvl, n, m), rep) in enumerate(zip(levels, reports)):
        order = None
        if k > 0:
            prev = reports[k - 1].energy_error
            if prev <= 1e-9 or rep.energy_error <= 1e-9:
                order = "exact"
            else:
                order = float(np.log2(prev / rep.energy_error))
        rows.append((lvl, bench.domain.length / n, bench.domain.t_final / m) + rep.row()
                    + (order,))
    return rows


def run_convergence(cfg):
    try:
        rows = convergence_rows(cfg)
    except solver.SolverError as err:
        return _failure(cfg, err)
    text = _csv(CONVERGENCE_HEADER, rows)
    _write_all(cfg.out, {"convergence.csv": text})
    sys.stdout.write(text)
    return EXIT_OK


def inspect_mesh(cfg, samples=20):
    """Write node trajectories (node, partition, t, x) at ``samples`` times per partition."""
    bench, rule, basis, motion, reconf, grid = _setup(cfg, cfg.elements, cfg.partitions)
    try:
        parts = solver.build_mesh_sequence(uniform_slice(bench.domain, cfg.elements), grid,
                                           motion, rule, basis, reconf)
    except solver.SolverError as err:
        return _failure(cfg, err)
    rows = []
    for part in parts:
        tab = snapshot_rows(part, samples)
        for k in range(tab.shape[1] - 1):
            rows.extend((k, part.index, t, x) for t, x in zip(tab[:, 0], tab[:, k + 1]))
    _write_all(cfg.out, {"mesh_trajectories.csv": _csv(("node", "partition", "t", "x"), rows)})
    return EXIT_OK


def make_parser():
    parser = argparse.ArgumentParser(prog="charfem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "convergence", "inspect-mesh"):
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--benchmark")
        p.add_argument("--p", type=int)
        p.add_argument("--rule", help="gauss | radau | theta:S")
        p.add_argument("--basis", help="coincident | equispaced")
        p.add_argument("--elements", type=int)
        p.add_argument("--partitions", type=int)
        p.add_argument("--levels", type=int)
        p.add_argument("--motion", help="static | characteristics | prescribed:NAME")
        p.add_argument("--reconfigure", help="keep | uniform")
        p.add_argument("--dt-ceiling", dest="dt_ceiling", type=float)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    command = {"run": run_single, "convergence": run_convergence,
               "inspect-mesh": inspect_mesh}[args.command]
    try:
        return command(cfg)
    except DegenerateMeshError as err:
        return _failure(cfg, err)


if __name__ == "__main__":
    sys.exit(main())
