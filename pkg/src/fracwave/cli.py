"""Command-line interface.

Verbs:
  solve    --config problem.yaml --out-dir out/   -> solution.csv + report.json
  check    --config problem.yaml                  -> conditions report only
  verify   --config problem.yaml --solution solution.csv
  selftest                                        -> closed-form property cases

Exit codes: 0 solved/passed, 2 resonant-infeasible, 3 validation failure,
4 numerical non-convergence or verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np
import yaml

from . import assembly, runner, selftest as selftest_mod
from .config import mode_forcing_matrix, parse_config
from .errors import FracwaveError, NonConvergenceError, ValidationError
from .operators import basis

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


def _load_config(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: cannot read config {path}: {e}", file=sys.stderr)
        return None, EXIT_VALIDATION
    try:
        return parse_config(text), EXIT_OK
    except ValidationError as e:
        print("invalid configuration:", file=sys.stderr)
        for path_, msg in e.issues:
            print(f"  {path_}: {msg}" if path_ else f"  {msg}", file=sys.stderr)
        return None, EXIT_VALIDATION
    except yaml.YAMLError as e:
        print(f"config parse error: {e}", file=sys.stderr)
        return None, EXIT_VALIDATION


def _cmd_solve(args) -> int:
    cfg, code = _load_config(args.config)
    if cfg is None:
        return code
    started = time.perf_counter()
    try:
        result = runner.run_solve(cfg)
    except NonConvergenceError as e:
        print(f"numerical non-convergence: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    os.makedirs(args.out_dir, exist_ok=True)
    if args.timing:
        result.report.timing_ms = (time.perf_counter() - started) * 1e3
    b = basis(cfg.operator, cfg.n_modes, cfg.space_nodes)
    runner.emit_report(result.report, os.path.join(args.out_dir, "report.json"),
                       points=b.grid.nodes)
    if result.status == runner.STATUS_INFEASIBLE:
        bad = ", ".join(map(str, result.report.infeasible_modes))
        print(f"no solution: forcing has a nonzero component on resonant "
              f"mode(s) {bad}; a solution exists only when the forcing "
              "component on every resonant mode vanishes", file=sys.stderr)
        return EXIT_INFEASIBLE
    runner.emit_csv(result.solution, os.path.join(args.out_dir, "solution.csv"))
    if result.report.free_modes:
        free = ", ".join(map(str, result.report.free_modes))
        print(f"solution family: free coefficient (set to 0) on resonant "
              f"mode(s) {free}")
    print(f"solved: {cfg.n_modes} modes, "
          f"max ODE residual {result.report.max_ode_residual:.3e}, "
          f"nonlocal residual {result.report.nonlocal_residual:.3e}")
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg, code = _load_config(args.config)
    if cfg is None:
        return code
    try:
        report = runner.check_only(cfg)
    except NonConvergenceError as e:
        print(f"numerical non-convergence: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.out:
        runner.emit_report(report, args.out)
    print(f"sum|mu| = {report.sum_abs_mu:.6g}; classical shortcut "
          f"{'applies and passes' if report.shortcut_pass else ('applies but fails' if report.shortcut_applicable else 'not applicable')}")
    print(f"envelope threshold lambda > {report.envelope_lambda_threshold:.6g} "
          f"(first such mode: {report.envelope_first_ordinal})")
    for entry in report.per_mode:
        print(f"  mode {entry['ordinal']:3d}  lambda={entry['eigenvalue']:<12.6g} "
              f"denominator={entry['denominator']:< 13.6g} "
              f"sum|mu u0(T_i)|={entry['sufficient_sum']:<12.6g} "
              f"{entry['condition_class']}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg, code = _load_config(args.config)
    if cfg is None:
        return code
    try:
        data = np.loadtxt(args.solution, delimiter=",", skiprows=1)
    except OSError as e:
        print(f"error: cannot read solution {args.solution}: {e}",
              file=sys.stderr)
        return EXIT_VALIDATION
    if data.ndim == 1:
        data = data[None, :]
    times = data[:, 0]
    values = data[:, 1:]
    b = basis(cfg.operator, cfg.n_modes, cfg.space_nodes)
    if values.shape[1] != len(b.grid):
        print(f"error: solution has {values.shape[1]} spatial columns, the "
              f"operator quadrature has {len(b.grid)} nodes", file=sys.stderr)
        return EXIT_VALIDATION
    grid = cfg.time_grid()
    if len(times) != len(grid) or np.max(np.abs(times - grid.nodes)) > 1e-9:
        print("error: solution time nodes do not match the configured grid",
              file=sys.stderr)
        return EXIT_VALIDATION
    try:
        forcing = mode_forcing_matrix(cfg, grid, b)
    except ValidationError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_VALIDATION

    # project each time slice onto the modes and run the oracles per mode
    coeffs = values @ (b.grid.weights[:, None] * b.values.T)   # (T, N)
    ok = True
    for i in range(cfg.n_modes):
        u = np.ascontiguousarray(coeffs[:, i])
        gate = 5e-4 * (1.0 + float(np.max(np.abs(forcing[i]))))
        r = assembly.residual_check(u, cfg.orders, b.modes[i].eigenvalue,
                                    forcing[i], grid)
        state = "ok" if r <= gate else "FAIL"
        ok &= r <= gate
        print(f"  mode {i + 1:3d}: ODE residual {r:.3e} (gate {gate:.1e}) {state}")
    sol = assembly.SolutionGrid(times=grid.nodes, points=b.grid.nodes,
                                values=values, truncation=cfg.n_modes)
    nl = assembly.nonlocal_condition_residual(sol, cfg.nonlocal_data.points)
    nl_gate = 1e-7 * (1.0 + float(np.max(np.abs(values))))
    state = "ok" if nl <= nl_gate else "FAIL"
    ok &= nl <= nl_gate
    print(f"  nonlocal condition residual {nl:.3e} (gate {nl_gate:.1e}) {state}")
    # truncation remainder of the projection (content outside the first N modes)
    recon = coeffs @ b.values
    trunc = float(np.max(np.abs(values - recon)))
    print(f"  spatial truncation remainder {trunc:.3e}")
    if ok:
        print("verify: all oracles passed")
        return EXIT_OK
    print("verify: oracle failure", file=sys.stderr)
    return EXIT_NUMERICAL


def _cmd_selftest(_args) -> int:
    return selftest_mod.run(print)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracwave",
        description="Multi-term time-fractional diffusion-wave solver with "
                    "multi-point time-nonlocal conditions")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a configured problem")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out-dir", required=True)
    p_solve.add_argument("--timing", action="store_true",
                         help="record wall time in the report (makes runs "
                              "non-byte-identical)")
    p_solve.set_defaults(fn=_cmd_solve)

    p_check = sub.add_parser("check",
                             help="evaluate non-resonance conditions only")
    p_check.add_argument("--config", required=True)
    p_check.add_argument("--out", default=None,
                         help="optional path for the conditions report")
    p_check.set_defaults(fn=_cmd_check)

    p_verify = sub.add_parser("verify",
                              help="re-run the oracles on an emitted CSV")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--solution", required=True)
    p_verify.set_defaults(fn=_cmd_verify)

    p_self = sub.add_parser("selftest",
                            help="run the closed-form property cases")
    p_self.set_defaults(fn=_cmd_selftest)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FracwaveError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(e, NonConvergenceError) \
            else EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
