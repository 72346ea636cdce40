"""Command line: ``lhvdyn <command> [--config PATH] [--seed N] [--workers N] [--reproducible] [--out DIR]``.

Exit status: 0 success, 1 a checked criterion failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import experiments, nogo, universal
from .config import ExperimentConfig, load_config, validate
from .errors import ConfigError
from .io import read_states, write_csv, write_json, write_manifest
from .quantum import bloch_derivatives

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--workers", type=int, help="threads for independent work items")
    common.add_argument("--reproducible", action="store_true", help="omit timings so reruns are byte-identical")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--quiet", action="store_true", help="no progress messages")

    p = argparse.ArgumentParser(prog="lhvdyn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-static", parents=[common], help="LHV vs quantum probabilities on a state ensemble")
    fv = sub.add_parser("fit-velocity", parents=[common], help="control and counterexample velocity-field fits")
    fv.add_argument("--L", type=_int_list, dest="L_list", help="basis degrees, e.g. 2,4,6,8")
    ng = sub.add_parser("nogo-table", parents=[common], help="dimension-counting table and critical particle numbers")
    ng.add_argument("--D", type=_int_list, dest="D_list", help="qudit dimensions, e.g. 2,3")
    ng.add_argument("--d", type=_int_list, dest="d_list", help="hidden-variable dimensions, e.g. 2,20")
    ng.add_argument("--N-max", type=int, dest="N_max")
    ng.add_argument("--kernel", type=int, help="kernel dimension subtracted from dim G")
    cv = sub.add_parser("covariance-check", parents=[common], help="group action and covariance of the softmax model")
    cv.add_argument("--l-max", type=int, dest="l_max")
    cv.add_argument("--trials", type=int, dest="n_trials")
    cv.add_argument("--corrupt", type=float, help=argparse.SUPPRESS)
    dv = sub.add_parser("derivs", parents=[common], help="Bloch-data time derivatives for a state file")
    dv.add_argument("--states", dest="states_file", metavar="PATH", help="state file (15 reals per line)")
    dv.add_argument("--omega", type=float)
    return p


_OVERRIDES = ("seed", "workers", "out", "L_list", "D_list", "d_list", "N_max", "kernel", "l_max", "n_trials", "corrupt", "states_file", "omega")


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if "states_file" in over:
        over["states_file"] = os.path.abspath(over["states_file"])
    cfg = cfg.replace(**over)
    validate(cfg)
    return cfg


def _inputs(args, cfg):
    return [p for p in (args.config, cfg.states_file) if p]


def cmd_verify_static(args, cfg, log) -> int:
    started = time.perf_counter()
    states = experiments.build_states(cfg)
    if not states:
        raise ConfigError("the state list is empty")
    rows, summary = experiments.static_sweep(states, cfg)
    csv_path = os.path.join(cfg.out, "static_errors.csv")
    json_path = os.path.join(cfg.out, "static_summary.json")
    write_csv(csv_path, experiments.STATIC_COLUMNS, rows)
    if not args.reproducible:
        summary["elapsed_seconds"] = round(time.perf_counter() - started, 3)
    write_json(json_path, summary)
    write_manifest(cfg.out, "verify-static", cfg.as_dict(), _inputs(args, cfg), [csv_path, json_path])
    log(f"max |P_LHV - P_QM| = {summary['max_abs_err']:.3e} over {summary['n_probabilities']} probabilities")
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def cmd_fit_velocity(args, cfg, log) -> int:
    started = time.perf_counter()
    result = experiments.fit_velocity_experiment(cfg, log=log)
    csv_path = os.path.join(cfg.out, "residual_curve.csv")
    json_path = os.path.join(cfg.out, "feasibility_report.json")
    write_csv(csv_path, experiments.CURVE_COLUMNS, result["curve_rows"])
    report = {k: result[k] for k in ("control", "counterexample", "chain", "summary")}
    if not args.reproducible:
        report["summary"]["elapsed_seconds"] = round(time.perf_counter() - started, 3)
    write_json(json_path, report)
    write_manifest(cfg.out, "fit-velocity", cfg.as_dict(), _inputs(args, cfg), [csv_path, json_path])
    s = report["summary"]
    log(f"plateau met: {s['plateau_met']}, control met: {s['control_met']}")
    return EXIT_OK if s["contrast_met"] else EXIT_FAIL


def cmd_nogo_table(args, cfg, log) -> int:
    rows = nogo.constraint_table(cfg.D_list, cfg.d_list, cfg.N_max, cfg.kernel)
    crit = nogo.critical_table(cfg.D_list, cfg.d_list, cfg.kernel)
    table_path = os.path.join(cfg.out, "nogo_table.csv")
    crit_path = os.path.join(cfg.out, "nogo_critical.csv")
    nogo.write_table_csv(rows, table_path)
    write_csv(crit_path, ("D", "d", "max_N"), crit)
    write_manifest(cfg.out, "nogo-table", cfg.as_dict(), _inputs(args, cfg), [table_path, crit_path])
    for D, d, n in crit:
        log(f"D={D} d={d}: max N = {n}")
    return EXIT_OK


def cmd_covariance_check(args, cfg, log) -> int:
    started = time.perf_counter()
    basis = universal.BasisSpec(cfg.l_max)
    report = universal.covariance_suite(basis, cfg.n_trials, cfg.seed, corrupt=cfg.corrupt)
    if not args.reproducible:
        report["elapsed_seconds"] = round(time.perf_counter() - started, 3)
    json_path = os.path.join(cfg.out, "covariance_report.json")
    basis_path = os.path.join(cfg.out, "basis.json")
    dm_path = os.path.join(cfg.out, "d_matrix_example.csv")
    write_json(json_path, report)
    write_json(basis_path, {"l_max": basis.l_max, "K": basis.K, "convention": basis.convention, "order": [list(x) for x in basis.labels()]})
    rng = np.random.default_rng(experiments.seed_streams(cfg.seed)["chain"])
    universal.d_matrix(universal.random_unitary(rng), basis).to_csv(dm_path)
    write_manifest(cfg.out, "covariance-check", cfg.as_dict(), _inputs(args, cfg), [json_path, basis_path, dm_path])
    log(f"covariance suite passed: {report['passed']}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_derivs(args, cfg, log) -> int:
    if not cfg.states_file:
        raise ConfigError("derivs needs a state file (--states or states_file)")
    try:
        states = read_states(cfg.states_file)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not states:
        raise ConfigError("the state file holds no states")
    header = ["state"] + [f"da_{i}" for i in "xyz"] + [f"db_{i}" for i in "xyz"] + [f"dT_{i}{j}" for i in "xyz" for j in "xyz"]
    rows = []
    for k, s in enumerate(states):
        da, db, dT = bloch_derivatives(s, cfg.omega)
        rows.append([k, *da, *db, *dT.ravel()])
    csv_path = os.path.join(cfg.out, "derivs.csv")
    write_csv(csv_path, header, rows)
    write_manifest(cfg.out, "derivs", cfg.as_dict(), _inputs(args, cfg), [csv_path])
    log(f"wrote derivatives of {len(states)} states")
    return EXIT_OK


COMMANDS = {
    "verify-static": cmd_verify_static,
    "fit-velocity": cmd_fit_velocity,
    "nogo-table": cmd_nogo_table,
    "covariance-check": cmd_covariance_check,
    "derivs": cmd_derivs,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    def log(msg):
        if not args.quiet:
            print(msg, file=sys.stderr, flush=True)

    try:
        cfg = resolve_config(args)
        os.makedirs(cfg.out, exist_ok=True)
        return COMMANDS[args.command](args, cfg, log)
    except (ConfigError, OSError) as exc:
        print(f"lhvdyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
