"""Batch command-line front end.

Subcommands: ``run`` executes one experiment config and writes artifacts,
``sweep`` repeats it over a parameter list, ``probe`` reports monotonicity
diagnostics, ``analytic`` prints the closed-form coefficients.  Exit codes:
0 success, 1 config error, 2 diverged (artifacts still written), 3 not
converged.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import config as cfgmod
from ._backend import backend_name
from .errors import ConfigError, DivergedError, NotConvergedError
from .grid import PolicyField, ValueField
from .hjb import policy_iteration, value_iteration
from .linfa import BOUND_SCALED, bellman_residual, fa_train, features_matrix, greedy_actions, probe_points
from .model import LqProblem, analytic_policy, analytic_value, riccati_residual, riccati_solve
from .monotone import (
    DivergenceMonitor,
    analytic_field,
    coefficient_check,
    probe_operator_monotonicity,
    relative_sup_error,
    sup_error,
)
from .qlearn import fit_policy_slope, fit_value_curvature, greedy_extract
from .qlearn import train as q_train
from .runio import ensure_dir, format_number, write_csv, write_fields_csv, write_overlay_svg, write_report

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_NOT_CONVERGED = 3

REPORT_INTERIOR = 2.0 / 3.0

_EPILOG = """\
CSV columns:
  log.csv (hjb-vi):  iteration,residual,sup_norm
  log.csv (hjb-pi):  round,iteration,residual,sup_norm
  log.csv (qlearn):  episode,steps,max_abs_q,sup_err
  log.csv (linfa):   step,w_norm,probe_residual
  fields.csv:        node,x,value,policy,analytic_value,analytic_policy
  coefficients.csv:  node,x,u_star,c_minus,c_center,c_plus
  sweep.csv:         value,converged,sup_error,trip_iteration

Environment:
  LQLAB_OUT      default output root (per-run directory named after the config)
  LQLAB_BACKEND  kernel backend: auto (default), compiled, pure

Exit codes: 0 ok, 1 config error, 2 diverged (artifacts written), 3 not converged.
"""


def _out_dir(config_path: str, flag: str | None) -> str:
    if flag:
        return flag
    stem = os.path.splitext(os.path.basename(config_path))[0]
    root = os.environ.get("LQLAB_OUT")
    return os.path.join(root, stem) if root else stem + "_out"


def _write_field_artifacts(out, problem, grid, values, controls):
    sol = riccati_solve(problem)
    x = grid.nodes()
    av = analytic_value(sol, x)
    au = analytic_policy(sol, x, problem)
    write_fields_csv(os.path.join(out, "fields.csv"), grid, values, controls, av, au)
    write_overlay_svg(
        os.path.join(out, "value.svg"), x,
        [("learned", values), ("analytic", av)],
        "value function", "x", "V(x)",
    )
    write_overlay_svg(
        os.path.join(out, "policy.svg"), x,
        [("learned", controls), ("analytic", au)],
        "policy", "x", "u(x)",
    )
    return sol


def _base_report(cfg, code, wall):
    return {
        "kind": cfg["kind"],
        "config_hash": cfgmod.canonical_hash(cfg),
        "backend": backend_name(),
        "seed": cfg["seed"],
        "exit_code": code,
        "wall_time_s": wall,
    }


def _run_hjb(cfg, out):
    problem = cfgmod.build_problem(cfg)
    grid = cfgmod.build_grid(cfg, problem)
    scheme = cfgmod.build_scheme(cfg)
    threshold = cfg["monitor.threshold"]
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        if cfg["kind"] == "hjb-vi":
            vf, pf, log = value_iteration(problem, grid, scheme, div_threshold=threshold)
        else:
            u0 = PolicyField.constant(grid, cfg["pi.u0"])
            vf, pf, log = policy_iteration(problem, grid, scheme, u0, div_threshold=threshold)
    except DivergedError as e:
        vf, pf, log = (e.artifacts[k] for k in ("value_field", "policy_field", "log"))
        code = EXIT_DIVERGED
    except NotConvergedError as e:
        vf, pf, log = (e.artifacts[k] for k in ("value_field", "policy_field", "log"))
        code = EXIT_NOT_CONVERGED
    wall = time.perf_counter() - t0

    iters = np.arange(log.n_iterations)
    if cfg["kind"] == "hjb-pi":
        rows = zip(log.rounds, iters, log.residuals, log.sup_norms)
        header = ("round", "iteration", "residual", "sup_norm")
    else:
        rows = zip(iters, log.residuals, log.sup_norms)
        header = ("iteration", "residual", "sup_norm")
    write_csv(os.path.join(out, "log.csv"), header, rows)

    sol = _write_field_artifacts(out, problem, grid, vf.values, pf.controls)
    report = _base_report(cfg, code, wall)
    report.update(
        converged=bool(log.converged),
        n_iterations=int(log.n_iterations),
        relaxation_rate=log.relaxation_rate,
        trip_iteration=log.trip_iteration,
        sup_error=float(sup_error(vf, sol, REPORT_INTERIOR)),
        relative_sup_error=float(relative_sup_error(vf, sol, REPORT_INTERIOR)),
    )
    write_report(os.path.join(out, "report.json"), report)
    return code, report


def _run_qlearn(cfg, out):
    problem = cfgmod.build_problem(cfg)
    mdp = cfgmod.build_mdp(cfg, problem)
    qcfg = cfgmod.build_qlearn(cfg)
    monitor = DivergenceMonitor(threshold=cfg["monitor.threshold"])
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        qt, log = q_train(mdp, qcfg, monitor=monitor)
    except DivergedError as e:
        qt, log = e.artifacts["qtable"], e.artifacts["log"]
        code = EXIT_DIVERGED
    wall = time.perf_counter() - t0

    write_csv(
        os.path.join(out, "log.csv"),
        ("episode", "steps", "max_abs_q", "sup_err"),
        zip(log.episodes, log.steps, log.max_abs_q, log.sup_err),
    )
    vf, pf = greedy_extract(qt)
    sol = _write_field_artifacts(out, problem, mdp.state_grid, vf.values, pf.controls)
    report = _base_report(cfg, code, wall)
    report.update(
        converged=not log.tripped,
        episodes_run=int(len(log.episodes)),
        trip_iteration=log.trip_iteration,
        sup_error=float(sup_error(vf, sol, REPORT_INTERIOR)),
        relative_sup_error=float(relative_sup_error(vf, sol, REPORT_INTERIOR)),
        policy_slope=float(fit_policy_slope(pf)),
        value_curvature=float(fit_value_curvature(vf)),
    )
    write_report(os.path.join(out, "report.json"), report)
    return code, report


def _run_linfa(cfg, out):
    problem = cfgmod.build_problem(cfg)
    mdp = cfgmod.build_mdp(cfg, problem)
    lr_mode = cfg["fa.lr_mode"]
    lr_param = cfg["fa.fraction"] if lr_mode == BOUND_SCALED else cfg["fa.lr"]
    monitor = DivergenceMonitor(threshold=cfg["monitor.threshold"])
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        w, log = fa_train(
            mdp, cfg["fa.n_steps"], seed=cfg["seed"], lr_mode=lr_mode,
            lr_param=lr_param, log_every=cfg["fa.log_every"], monitor=monitor,
        )
    except DivergedError as e:
        w, log = e.artifacts["weights"], e.artifacts["log"]
        code = EXIT_DIVERGED
    wall = time.perf_counter() - t0

    write_csv(
        os.path.join(out, "log.csv"),
        ("step", "w_norm", "probe_residual"),
        zip(log.steps, log.w_norm, log.probe_residual),
    )
    grid = mdp.state_grid
    x = grid.nodes()
    controls = greedy_actions(w, x, problem.u_min, problem.u_max)
    values = features_matrix(x, controls) @ w
    sol = _write_field_artifacts(out, problem, grid, values, controls)
    px, pu = probe_points(problem)
    report = _base_report(cfg, code, wall)
    report.update(
        converged=not log.tripped,
        steps_run=int(log.steps[-1]),
        trip_iteration=log.trip_iteration,
        weights=[float(c) for c in w],
        initial_probe_residual=float(log.probe_residual[0]),
        final_probe_residual=float(bellman_residual(w, mdp, px, pu)),
        sup_error=float(sup_error(ValueField(grid, values), sol, REPORT_INTERIOR)),
        relative_sup_error=float(
            relative_sup_error(ValueField(grid, values), sol, REPORT_INTERIOR)
        ),
    )
    write_report(os.path.join(out, "report.json"), report)
    return code, report


def _run_probe(cfg, out):
    problem = cfgmod.build_problem(cfg)
    grid = cfgmod.build_grid(cfg, problem)
    scheme = cfgmod.build_scheme(cfg)
    sol = riccati_solve(problem)
    t0 = time.perf_counter()
    if cfg["probe.reference"] == "converged":
        vf, _, _ = value_iteration(problem, grid, scheme,
                                   div_threshold=cfg["monitor.threshold"])
    elif cfg["probe.reference"] == "analytic":
        vf = analytic_field(problem, grid, sol)
    else:
        raise ConfigError(
            "probe.reference must be 'analytic' or 'converged'",
            field="probe.reference",
        )
    coeff = coefficient_check(problem, grid, scheme, vf)
    probe = probe_operator_monotonicity(
        coeff.apply, grid.n_nodes, seed=cfg["seed"], n_pairs=cfg["probe.n_pairs"]
    )
    wall = time.perf_counter() - t0

    x = grid.nodes()
    write_csv(
        os.path.join(out, "coefficients.csv"),
        ("node", "x", "u_star", "c_minus", "c_center", "c_plus"),
        zip(range(grid.n_nodes), x, coeff.u_star, coeff.c_minus, coeff.c_center, coeff.c_plus),
    )
    report = _base_report(cfg, EXIT_OK, wall)
    report.update(
        reference=cfg["probe.reference"],
        differencing=cfg["scheme.differencing"],
        pairs_tested=probe.n_pairs_tested,
        probe_violations=probe.n_violations,
        worst_violation=probe.worst_violation,
        violating_node=probe.violating_node,
        coefficient_violations=len(coeff.violations),
    )
    write_report(os.path.join(out, "report.json"), report)
    print(
        f"monotonicity probe [{cfg['scheme.differencing']}]: "
        f"{probe.n_pairs_tested} pairs, {probe.n_violations} violations "
        f"(worst {probe.worst_violation:.3e})"
    )
    print(f"coefficient check: {len(coeff.violations)} negative stencil coefficients")
    return EXIT_OK, report


_RUNNERS = {
    "hjb-vi": _run_hjb,
    "hjb-pi": _run_hjb,
    "qlearn": _run_qlearn,
    "linfa": _run_linfa,
    "probe": _run_probe,
}


def execute(cfg: dict, out: str) -> tuple[int, dict]:
    """Run one validated config, writing artifacts into ``out``."""
    ensure_dir(out)
    return _RUNNERS[cfg["kind"]](cfg, out)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    cfg = cfgmod.load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    code, report = execute(cfg, _out_dir(args.config, args.out))
    print(f"{cfg['kind']}: exit {code}"
          + (f", sup_error {report['sup_error']:.4g}" if "sup_error" in report else ""))
    return code


def _sweep_task(task):
    cfg, out = task
    code, report = execute(cfg, out)
    return code, report


def _cmd_sweep(args) -> int:
    base = cfgmod.load_config(args.config)
    param = args.param or base.get("sweep.param")
    if not param:
        raise ConfigError("sweep requires --param or sweep.param", field="sweep.param")
    raw_values = (
        [v for v in args.values.split(",") if v != ""]
        if args.values
        else base.get("sweep.values")
    )
    if not raw_values:
        raise ConfigError("sweep requires a nonempty --values list", field="sweep.values")
    schema = cfgmod.SCHEMAS[base["kind"]]
    if param not in schema or schema[param][0] not in (int, float, "float_or_auto"):
        raise ConfigError(
            f"sweep parameter {param!r} is not a numeric config field of "
            f"kind {base['kind']!r}",
            field="sweep.param",
        )
    cast = int if schema[param][0] is int else float
    try:
        values = [cast(v) for v in raw_values]
    except ValueError as e:
        raise ConfigError(f"bad sweep value: {e}", field="sweep.values") from e

    out_root = ensure_dir(_out_dir(args.config, args.out))
    tasks = []
    for i, v in enumerate(values):
        sub = dict(base)
        sub[param] = v
        sub["seed"] = base["seed"] + i
        sub_dir = os.path.join(out_root, f"{i:02d}_{param}={format_number(v)}")
        tasks.append((sub, sub_dir))

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]

    rows = []
    for v, (code, report) in zip(values, results):
        rows.append(
            (
                v,
                report.get("converged", False),
                report.get("sup_error"),
                report.get("trip_iteration"),
            )
        )
    write_csv(
        os.path.join(out_root, "sweep.csv"),
        ("value", "converged", "sup_error", "trip_iteration"),
        rows,
    )
    for v, (code, _) in zip(values, results):
        print(f"{param}={v}: exit {code}")
    return EXIT_OK


def _cmd_probe(args) -> int:
    cfg = cfgmod.load_config(args.config)
    if cfg["kind"] != "probe":
        raise ConfigError(
            f"'lqlab probe' requires kind 'probe', got {cfg['kind']!r}", field="kind"
        )
    if args.seed is not None:
        cfg["seed"] = args.seed
    code, _ = execute(cfg, _out_dir(args.config, args.out))
    return code


def _cmd_analytic(args) -> int:
    problem = LqProblem(drift=args.alpha, discount_rate=args.beta)
    sol = riccati_solve(problem)
    print(f"gamma = {sol.quad_coef!r}")
    print(f"residual = {riccati_residual(problem, sol.quad_coef)!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqlab",
        description=__doc__,
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to a JSON config")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="repeat a config over parameter values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", help="dotted config key to vary")
    p_sweep.add_argument("--values", help="comma-separated values")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel runs")
    p_sweep.add_argument("--out", help="output directory")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_probe = sub.add_parser("probe", help="monotonicity reports for a scheme")
    p_probe.add_argument("config")
    p_probe.add_argument("--out", help="output directory")
    p_probe.add_argument("--seed", type=int, help="override the config seed")
    p_probe.set_defaults(func=_cmd_probe)

    p_an = sub.add_parser("analytic", help="print the closed-form coefficients")
    p_an.add_argument("--alpha", type=float, required=True, help="drift")
    p_an.add_argument("--beta", type=float, required=True, help="discount rate")
    p_an.set_defaults(func=_cmd_analytic)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        field = f" [{e.field}]" if e.field else ""
        print(f"config error{field}: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
