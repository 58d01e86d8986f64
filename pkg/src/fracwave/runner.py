"""Solve orchestration: modes in, assembled solution and report out."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import assembly
from .backend import active as kernel_backend
from .config import ProblemConfig, mode_forcing_matrix
from .errors import ResonanceError
from .grids import TimeGrid
from .modes import (RESONANT_FAMILY, RESONANT_INFEASIBLE, ModeProblem,
                    ModeSolution, check_nonresonance, solve_mode,
                    solve_mode_resonant)
from .operators import basis
from .special import SeriesControl

STATUS_SOLVED = "solved"
STATUS_INFEASIBLE = "resonant-infeasible"


@dataclass
class RunReport:
    """Everything the solve learned, in a JSON-serializable shape."""

    per_mode: list
    sum_abs_mu: float
    shortcut_applicable: bool
    shortcut_pass: bool
    envelope_lambda_threshold: float
    envelope_first_ordinal: Optional[int]
    resonance_tol: float
    near_tol: float
    order_scale: float
    max_ode_residual: Optional[float]
    nonlocal_residual: Optional[float]
    free_modes: list
    infeasible_modes: list
    status: str
    backend: str
    timing_ms: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "backend": self.backend,
            "conditions": {
                "sum_abs_mu": self.sum_abs_mu,
                "shortcut_applicable": self.shortcut_applicable,
                "shortcut_pass": self.shortcut_pass,
                "envelope_lambda_threshold": self.envelope_lambda_threshold,
                "envelope_first_ordinal": self.envelope_first_ordinal,
                "resonance_tol": self.resonance_tol,
                "near_resonance_tol": self.near_tol,
            },
            "order_scale": self.order_scale,
            "per_mode": self.per_mode,
            "residuals": {
                "max_ode_residual": self.max_ode_residual,
                "nonlocal_residual": self.nonlocal_residual,
            },
            "free_modes": self.free_modes,
            "infeasible_modes": self.infeasible_modes,
            "timing": {"wall_ms": self.timing_ms},
        }


@dataclass
class RunResult:
    status: str
    report: RunReport
    solution: Optional[assembly.SolutionGrid]
    time_grid: TimeGrid
    mode_solutions: list
    forcing: np.ndarray          # (n_modes, time_nodes)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("FRACWAVE_THREADS", "1")))
    except ValueError:
        return 1


def run_solve(config: ProblemConfig, compute_residuals: bool = True) -> RunResult:
    """Solve the configured problem end to end.

    Resonant modes with vanishing forcing component join the solution family
    with free coefficient 0 (and are listed); a resonant mode with nonzero
    forcing component makes the whole problem infeasible: no solution exists
    unless the forcing has zero component on every resonant mode.
    """
    tol = config.tolerances
    ctl = SeriesControl(abs_tol=tol.series_abs_tol,
                        max_total_degree=tol.series_max_degree)
    grid = config.time_grid()
    b = basis(config.operator, config.n_modes, config.space_nodes)
    lambdas = b.eigenvalues()
    forcing = mode_forcing_matrix(config, grid, b)

    cond = check_nonresonance(config.orders, config.nonlocal_data, lambdas,
                              resonance_tol=tol.resonance,
                              near_tol=tol.near_resonance, ctl=ctl)

    def solve_one(i: int) -> ModeSolution:
        prob = ModeProblem(lam=float(lambdas[i]), forcing=forcing[i],
                           orders=config.orders,
                           nonlocal_data=config.nonlocal_data, grid=grid)
        try:
            return solve_mode(prob, resonance_tol=tol.resonance, ctl=ctl)
        except ResonanceError:
            return solve_mode_resonant(prob, 0.0,
                                       feasibility_tol=tol.feasibility, ctl=ctl)

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sols = list(pool.map(solve_one, range(config.n_modes)))
    else:
        sols = [solve_one(i) for i in range(config.n_modes)]

    free = [i + 1 for i, s in enumerate(sols) if s.regime == RESONANT_FAMILY]
    infeasible = [i + 1 for i, s in enumerate(sols)
                  if s.regime == RESONANT_INFEASIBLE]

    per_mode = []
    max_res = None
    for i, (mode, sol, rep) in enumerate(zip(b.modes, sols, cond.modes)):
        entry = {
            "ordinal": mode.ordinal,
            "eigenvalue": mode.eigenvalue,
            "label": list(map(str, mode.label)),
            "response_at_points": list(rep.response_at_points),
            "denominator": rep.denominator,
            "sufficient_sum": rep.sufficient_sum,
            "envelope_value": rep.envelope_value,
            "regime": sol.regime,
            "condition_class": rep.regime,
        }
        if compute_residuals and sol.regime != RESONANT_INFEASIBLE:
            r = assembly.residual_check(sol.samples, config.orders,
                                        float(lambdas[i]), forcing[i], grid)
            entry["ode_residual"] = r
            max_res = r if max_res is None else max(max_res, r)
        per_mode.append(entry)

    status = STATUS_INFEASIBLE if infeasible else STATUS_SOLVED
    solution = None
    nl_res = None
    if not infeasible:
        solution = assembly.assemble_solution(
            config.operator, sols, b.grid.nodes, config.n_modes,
            times=grid.nodes)
        if compute_residuals:
            nl_res = assembly.nonlocal_condition_residual(
                solution, config.nonlocal_data.points)

    report = RunReport(
        per_mode=per_mode, sum_abs_mu=cond.sum_abs_mu,
        shortcut_applicable=cond.shortcut_applicable,
        shortcut_pass=cond.shortcut_pass,
        envelope_lambda_threshold=cond.envelope_lambda_threshold,
        envelope_first_ordinal=cond.envelope_first_ordinal,
        resonance_tol=cond.resonance_tol, near_tol=cond.near_tol,
        order_scale=config.orders.scale,
        max_ode_residual=max_res, nonlocal_residual=nl_res,
        free_modes=free, infeasible_modes=infeasible,
        status=status, backend=kernel_backend())
    return RunResult(status=status, report=report, solution=solution,
                     time_grid=grid, mode_solutions=sols, forcing=forcing)


def check_only(config: ProblemConfig):
    """Non-resonance conditions without solving; returns the report."""
    tol = config.tolerances
    ctl = SeriesControl(abs_tol=tol.series_abs_tol,
                        max_total_degree=tol.series_max_degree)
    b = basis(config.operator, config.n_modes, config.space_nodes)
    cond = check_nonresonance(config.orders, config.nonlocal_data,
                              b.eigenvalues(), resonance_tol=tol.resonance,
                              near_tol=tol.near_resonance, ctl=ctl)
    per_mode = [{
        "ordinal": i + 1,
        "eigenvalue": rep.lam,
        "response_at_points": list(rep.response_at_points),
        "denominator": rep.denominator,
        "sufficient_sum": rep.sufficient_sum,
        "envelope_value": rep.envelope_value,
        "condition_class": rep.regime,
    } for i, rep in enumerate(cond.modes)]
    return RunReport(
        per_mode=per_mode, sum_abs_mu=cond.sum_abs_mu,
        shortcut_applicable=cond.shortcut_applicable,
        shortcut_pass=cond.shortcut_pass,
        envelope_lambda_threshold=cond.envelope_lambda_threshold,
        envelope_first_ordinal=cond.envelope_first_ordinal,
        resonance_tol=cond.resonance_tol, near_tol=cond.near_tol,
        order_scale=config.orders.scale,
        max_ode_residual=None, nonlocal_residual=None,
        free_modes=[], infeasible_modes=[],
        status="checked", backend=kernel_backend())


# ---------------------------------------------------------------------------
# artifact emission (byte-stable)


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def emit_csv(solution: assembly.SolutionGrid, path: str) -> None:
    """Header ``t,x1,...,xP``, one row per time node, 17 significant digits."""
    cols = solution.values.shape[1]
    with open(path, "w", newline="\n") as fh:
        fh.write("t," + ",".join(f"x{j + 1}" for j in range(cols)) + "\n")
        for i, tv in enumerate(solution.times):
            row = [format_float(tv)]
            row.extend(format_float(v) for v in solution.values[i])
            fh.write(",".join(row) + "\n")


def emit_report(report: RunReport, path: str,
                points: Optional[np.ndarray] = None) -> None:
    doc = report.to_dict()
    if points is not None:
        pts = np.asarray(points, dtype=float)
        doc["points"] = [list(map(float, np.atleast_1d(p))) for p in pts]
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
