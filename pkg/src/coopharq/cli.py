"""Command-line entry point: sweep a scenario file and emit CSV.

Every subcommand reads a TOML scenario (see ``coopharq.scenario``), evaluates
each grid point with the library and writes one row per metric.  Rows come
out in lexicographic order of ``(gamma_t_db, rho, m, K)`` whatever the
number of workers.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numeric non-convergence (affected rows are still written, with status
``nonconverged`` and an empty analytic value).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .channel import ModelError
from .harq import dlt, outage_dest
from .montecarlo import SimulatorUnsupported, simulate
from .optimizer import default_search, optimal_rate
from .scenario import GridPoint, Scenario, ScenarioError, load_scenario
from .specfun import ConvergenceError
from .validation import validate_config

__all__ = ["COMMANDS", "HEADER", "main", "run"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3

COMMANDS = ("outage", "dlt", "optimize", "validate", "simulate")
HEADER = ("gamma_t_db", "rho", "m", "K", "rate", "metric", "analytic", "mc_mean", "mc_half_width", "status")
NONCONVERGED = "nonconverged"

log = logging.getLogger("coopharq")


@dataclass(frozen=True)
class Row:
    point: GridPoint
    rate: float
    metric: str
    analytic: float | None = None
    mc_mean: float | None = None
    mc_half_width: float | None = None
    status: str = "ok"

    def cells(self) -> list[str]:
        p = self.point
        values = (p.gamma_t_db, p.rho, p.m, p.K, self.rate, self.metric, self.analytic, self.mc_mean, self.mc_half_width)
        return [_fmt(v) for v in values] + [self.status]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return "%.12g" % value


@dataclass(frozen=True)
class _Task:
    command: str
    scenario: Scenario
    point: GridPoint


def _analytic(fn, *args):
    try:
        return fn(*args), "ok"
    except ConvergenceError as exc:
        log.error("no convergence: %s", exc)
        return None, NONCONVERGED


def _outage_rows(sc: Scenario, point: GridPoint) -> list[Row]:
    cfg = sc.config(point)
    value, status = _analytic(outage_dest, cfg, cfg.K)
    mc = mc_hw = None
    if sc.sim_enabled:
        est = simulate(cfg, sc.episodes, sc.seed).outage()[-1]
        mc, mc_hw = est.mean, est.half_width_3sigma
    return [Row(point, cfg.rate, "outage", value, mc, mc_hw, status)]


def _dlt_rows(sc: Scenario, point: GridPoint) -> list[Row]:
    rates = sc.rates if sc.rates is not None else (sc.rate,)
    rows = []
    for rate in rates:
        cfg = sc.config(point, rate)
        value, status = _analytic(dlt, cfg)
        mc = mc_hw = None
        if sc.sim_enabled:
            est = simulate(cfg, sc.episodes, sc.seed).dlt()
            mc, mc_hw = est.mean, est.half_width_3sigma
        rows.append(Row(point, rate, "dlt", value, mc, mc_hw, status))
    return rows


def _optimize_rows(sc: Scenario, point: GridPoint) -> list[Row]:
    cfg = sc.config(point)
    search = sc.search() or default_search(cfg, sc.search_tol)
    result, status = _analytic(optimal_rate, cfg, search)
    if result is None:
        return [Row(point, cfg.rate, metric, status=status) for metric in ("rate_opt", "dlt_opt", "iterations")]
    rate = result.rate_opt
    mc = mc_hw = None
    if sc.sim_enabled:
        est = simulate(cfg.with_rate(rate), sc.episodes, sc.seed).dlt()
        mc, mc_hw = est.mean, est.half_width_3sigma
    return [
        Row(point, rate, "rate_opt", rate, status=result.status),
        Row(point, rate, "dlt_opt", result.dlt_opt, mc, mc_hw, result.status),
        Row(point, rate, "iterations", result.iterations, status=result.status),
    ]


def _simulate_rows(sc: Scenario, point: GridPoint) -> list[Row]:
    cfg = sc.config(point)
    summary = simulate(cfg, sc.episodes, sc.seed)
    rows = []
    for r, est in enumerate(summary.relay_outage(), start=1):
        rows.append(Row(point, cfg.rate, f"relay_outage_r{r}", None, est.mean, est.half_width_3sigma))
    for k, est in enumerate(summary.outage(), start=1):
        rows.append(Row(point, cfg.rate, f"dest_outage_k{k}", None, est.mean, est.half_width_3sigma))
    est = summary.dlt()
    rows.append(Row(point, cfg.rate, "dlt", None, est.mean, est.half_width_3sigma))
    rows.append(Row(point, cfg.rate, "mean_rounds", None, summary.mean_rounds))
    return rows


def _validate_lines(sc: Scenario, point: GridPoint) -> list[tuple[bool, str]]:
    cfg = sc.config(point)
    where = f"gamma_t_db={_fmt(point.gamma_t_db)} rho={_fmt(point.rho)} m={_fmt(point.m)} K={point.K}"
    try:
        checks = validate_config(cfg, sc.episodes, sc.seed)
    except ConvergenceError as exc:
        return [(False, f"FAIL {where} {NONCONVERGED}: {exc}")]
    lines = []
    for c in checks:
        verdict = "PASS" if c.passed else "FAIL"
        lines.append((
            c.passed,
            f"{verdict} {where} {c.name} expected={_fmt(c.expected)} observed={_fmt(c.observed)} "
            f"allowed={_fmt(c.allowed)} margin={_fmt(c.margin)}",
        ))
    return lines


_HANDLERS = {
    "outage": _outage_rows,
    "dlt": _dlt_rows,
    "optimize": _optimize_rows,
    "simulate": _simulate_rows,
    "validate": _validate_lines,
}


def _evaluate(task: _Task):
    return _HANDLERS[task.command](task.scenario, task.point)


def _override(sc: Scenario, args: argparse.Namespace) -> Scenario:
    changes = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ScenarioError("--seed: must be an unsigned 64-bit integer")
        changes["seed"] = args.seed
    if args.episodes is not None:
        if args.episodes < 10_000:
            raise ScenarioError("--episodes: need at least 10000")
        changes["episodes"] = args.episodes
    if args.no_sim:
        changes["sim_enabled"] = False
    sc = replace(sc, **changes)
    if args.command in ("validate", "simulate") and not sc.sim_enabled:
        raise ScenarioError(f"{args.command}: needs an enabled [sim] section")
    if args.command == "dlt" and sc.rates is None and sc.rate is None:
        raise ScenarioError("[protocol]: dlt needs rates (or rate)")
    if args.command in ("outage", "validate", "simulate") and sc.rate is None:
        raise ScenarioError(f"[protocol] rate: missing (required by {args.command})")
    return sc


def run(command: str, scenario: Scenario, workers: int = 1) -> tuple[str, int]:
    """Evaluate ``scenario`` and return ``(output text, exit code)``."""
    tasks = [_Task(command, scenario, p) for p in scenario.grid()]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate, tasks))
    else:
        results = [_evaluate(t) for t in tasks]

    if command == "validate":
        lines = [line for part in results for line in part]
        failed = sum(1 for ok, _ in lines if not ok)
        text = "".join(line + "\n" for _, line in lines)
        text += f"{len(lines)} checks, {failed} failed\n"
        return text, EXIT_VALIDATION if failed else EXIT_OK

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    code = EXIT_OK
    for part in results:
        for row in part:
            writer.writerow(row.cells())
            if row.status == NONCONVERGED:
                code = EXIT_NONCONVERGED
    return buf.getvalue(), code


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopharq", description="Cooperative HARQ-CC outage and throughput sweeps.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", required=True, help="TOML scenario file")
    parser.add_argument("--out", default="-", help="output path, or - for stdout (default)")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for the grid")
    parser.add_argument("--seed", type=int, help="override [sim] seed")
    parser.add_argument("--episodes", type=int, help="override [sim] episodes")
    parser.add_argument("--no-sim", action="store_true", help="analytic columns only")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = _parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scenario = _override(load_scenario(args.scenario), args)
        text, code = run(args.command, scenario, args.workers)
    except (ScenarioError, ModelError, SimulatorUnsupported) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
