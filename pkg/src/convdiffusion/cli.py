"""Command-line entry point: ``solve``, ``compare`` and ``bench``.

Exit status: 0 success, 1 configuration or input error, 2 non-convergence,
3 comparison above the configured bound.
"""

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .discretisation import discretise
from .exceptions import ConvDiffusionError, NonConvergence, ParseError
from .fields import _hadamard_inverse, interior_view
from .config import load_run_config
from .solver import KEffSolver

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_COMPARE = 0, 1, 2, 3


def _fmt(x):
    return "%.17g" % x


def write_flux(directory, flux):
    """One CSV per group; rows run from the top of the domain (largest j) down."""
    paths = []
    for g, field in enumerate(flux, start=1):
        path = directory / f"flux_g{g}.csv"
        np.savetxt(path, np.flipud(field), fmt="%.17g", delimiter=",")
        paths.append(path)
    return paths


def write_history(directory, history):
    path = directory / "keff_history.csv"
    lines = ["power_iter,k_eff"] + [f"{m},{_fmt(k)}" for m, k in history]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_summary(directory, entries, name="summary.txt"):
    path = directory / name
    path.write_text("".join(f"{key} = {value}\n" for key, value in entries))
    return path


def _state_summary(state, problem, wall):
    res = state.inner_residuals
    return [
        ("k_eff", _fmt(state.k_eff)),
        ("converged", str(state.converged).lower()),
        ("power_iters", state.power_iters),
        ("multigroup_iters", state.multigroup_iters),
        ("inner_iters", state.inner_iters),
        ("final_inner_residual_linf", _fmt(res[-1]) if res else "nan"),
        ("max_inner_residual_linf", _fmt(max(res)) if res else "nan"),
        ("final_flux_change_linf",
         _fmt(state.flux_change_history[-1]) if state.flux_change_history else "nan"),
        ("n_groups", problem.n_groups),
        ("nx", problem.shape[1]),
        ("ny", problem.shape[0]),
        ("scheme", problem.scheme),
        ("wall_time_s", "%.3f" % wall),
    ]


def _run(cfg, spatial_solver):
    """Fit one pipeline; returns ``(state, problem, wall, converged)``."""
    fields = cfg.build_fields()
    est = KEffSolver(**cfg.solver_params(spatial_solver))
    problem = est._discretise(fields)
    t0 = time.perf_counter()
    try:
        est.fit(problem)
        state, ok = est.state_, True
    except NonConvergence as exc:
        state, ok = exc.state, False
    return state, problem, time.perf_counter() - t0, ok


def run_solve(cfg, log=print):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    state, problem, wall, ok = _run(cfg, "multigrid")
    write_flux(out, state.flux())
    write_history(out, state.keff_history)
    write_summary(out, _state_summary(state, problem, wall))
    if not ok:
        log(f"not converged after {state.power_iters} power iterations "
            f"(k_eff = {state.k_eff:.10f}); partial results in {out}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    log(f"k_eff = {state.k_eff:.10f} after {state.power_iters} power iterations")
    return EXIT_OK


def run_compare(cfg, log=print):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    mg, problem, t_mg, ok_mg = _run(cfg, "multigrid")
    gs, _, t_gs, ok_gs = _run(cfg, "gauss_seidel")
    a, b = mg.flux(), gs.flux()
    rows = ["quantity,group,value"]
    worst = 0.0
    for g in range(problem.n_groups):
        d = a[g] - b[g]
        linf = float(np.max(np.abs(d)))
        worst = max(worst, linf)
        rows.append(f"linf,{g + 1},{_fmt(linf)}")
        rows.append(f"l2,{g + 1},{_fmt(float(np.sqrt(np.sum(d * d))))}")
    rows.append(f"abs_delta_keff,all,{_fmt(abs(mg.k_eff - gs.k_eff))}")
    hist = [abs(x[1] - y[1]) for x, y in zip(mg.keff_history, gs.keff_history)]
    rows.append(f"keff_history_max_diff,all,{_fmt(max(hist))}")
    rows.append(f"power_iters_multigrid,all,{mg.power_iters}")
    rows.append(f"power_iters_oracle,all,{gs.power_iters}")
    (out / "compare_report.csv").write_text("\n".join(rows) + "\n")
    write_summary(out, [("linf_max", _fmt(worst)), ("linf_bound", _fmt(cfg.compare_linf)),
                        ("k_eff_multigrid", _fmt(mg.k_eff)), ("k_eff_oracle", _fmt(gs.k_eff)),
                        ("wall_time_multigrid_s", "%.3f" % t_mg),
                        ("wall_time_oracle_s", "%.3f" % t_gs)], name="compare_summary.txt")
    if not (ok_mg and ok_gs):
        log("a pipeline did not converge; see compare_report.csv", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    if not worst <= cfg.compare_linf:
        log(f"flux difference {worst:.3e} exceeds bound {cfg.compare_linf:.3e}",
            file=sys.stderr)
        return EXIT_COMPARE
    log(f"flux linf difference {worst:.3e}, |dk| {abs(mg.k_eff - gs.k_eff):.3e}")
    return EXIT_OK


def _bench_once(ops, n_iters):
    t0 = time.perf_counter()
    for phi, s, inv_diag, D, taps, h in ops:
        for _ in range(n_iters):
            phi = _kernels.jacobi(phi, s, inv_diag, D, *taps, h)
    return time.perf_counter() - t0


def run_bench(cfg, log=print):
    """Time ``bench_jacobi_iters`` Jacobi sweeps over every group, repeated."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = discretise(cfg.build_fields(), cfg.scheme, cfg.vacuum_mode,
                         cfg.within_group, cfg.constrained_reflective)
    rng = np.random.default_rng(cfg.seed)
    h = problem.halo
    ops = []
    for g in range(problem.n_groups):
        diag = problem.diag[g].values
        phi = np.zeros_like(diag)
        s = np.zeros_like(diag)
        interior_view(s, h)[...] = rng.random(problem.shape)
        ops.append((phi, s, _hadamard_inverse(diag, h), problem.D[g].values,
                    _kernels.nonzeros(problem.od_filter.weights), h))
    _bench_once(ops, 1)  # compile outside the timed region
    times = [_bench_once(ops, cfg.bench_jacobi_iters) for _ in range(cfg.bench_repeats)]
    rows = ["repeat_index,seconds"] + [f"{i},{_fmt(t)}" for i, t in enumerate(times)]
    rows += ["min,max,mean", ",".join(_fmt(x) for x in (min(times), max(times),
                                                          sum(times) / len(times)))]
    (out / "bench.csv").write_text("\n".join(rows) + "\n")
    log(f"{cfg.bench_repeats} repeats: min {min(times):.4g} s, "
        f"mean {sum(times) / len(times):.4g} s, max {max(times):.4g} s")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="convdiffusion",
        description="Multigroup diffusion k-eff solver built from stencil convolutions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("solve", "solve the eigenproblem and write flux and history CSVs"),
                       ("compare", "run multigrid and the Gauss-Seidel oracle and diff them"),
                       ("bench", "time repeated Jacobi sweeps (informational)")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", type=Path, help="run configuration file")
        p.add_argument("--output-dir", type=Path)
        p.add_argument("--scheme", choices=("fv", "convfem"))
        p.add_argument("--rods", choices=("withdrawn", "inserted"))
        p.add_argument("--core-map", help="e.g. WWI/WIW/IWW; implies a core run")
        if name == "bench":
            p.add_argument("--repeats", type=int, help="number of timed repeats (default 400)")
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    if args.scheme is not None:
        changes["scheme"] = args.scheme
        if args.scheme == "convfem" and cfg.vacuum_mode == "absorption":
            changes["vacuum_mode"] = None
    if args.rods is not None:
        changes["rods"] = args.rods
    if args.core_map is not None:
        changes["core_map"] = args.core_map
        changes["kind"] = "core"
    if getattr(args, "repeats", None) is not None:
        changes["bench_repeats"] = args.repeats
    return dataclasses.replace(cfg, **changes) if changes else cfg


_COMMANDS = {"solve": run_solve, "compare": run_compare, "bench": run_bench}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_run_config(args.config), args)
        return _COMMANDS[args.command](cfg)
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvDiffusionError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
