"""Command-line interface: one-shot solves, backtests, and reports.

Subcommands:

``riskbudget solve --config problem.json [--tol T] [--max-iters K]``
    Solve one allocation problem (schema documented in
    :mod:`riskbudget.allocation`); prints the result as JSON followed by a
    readable table. Exit code 0 on an optimal solution, 2 when the
    problem is infeasible, 1 on any other error.

``riskbudget backtest --prices prices.csv --config config.json --out-dir DIR
[--strategies CRB,MRB,...]``
    Run the configured strategies over a daily prices CSV and write one
    ledger CSV per strategy, summary/drawdown tables (CSV and aligned
    text), and a reproducibility manifest with input hashes.

``riskbudget report LEDGER.csv [LEDGER.csv ...] [--top K] [--out-dir DIR]``
    Print the top-k drawdown table (one column per strategy) and summary
    statistics for previously written ledgers.

The only environment variable honored is ``RISKBUDGET_LOG_LEVEL``. Output
files are written atomically (temp file + rename). Identical inputs give
byte-identical outputs; the manifest's timestamp is the one exception.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .allocation import (
    AllocationError,
    InfeasibleAllocation,
    problem_from_json,
    solve_allocation,
)
from .analytics import (
    drawdowns,
    format_drawdown_table,
    format_summary_table,
    drawdown_table_rows,
    summary,
    summary_table_rows,
)
from .backtest import (
    STRATEGIES,
    BacktestConfig,
    ledger_from_csv,
    ledger_to_csv,
    normalize_strategy,
    run,
)
from .data import EmptyIntersection, ParseError, load_csv, to_weekly
from .solver import SolverOptions

log = logging.getLogger("riskbudget.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _solver_options(args) -> SolverOptions | None:
    """Explicit options when flags were given, else None for the callee's default."""
    if args.tol is None and args.max_iters is None:
        return None
    opts = SolverOptions()
    if args.tol is not None:
        opts.tol_feas = opts.tol_gap = opts.tol_cone = args.tol
    if args.max_iters is not None:
        opts.max_iters = args.max_iters
    return opts


def cmd_solve(args) -> int:
    try:
        with open(args.config) as fh:
            problem = problem_from_json(fh.read())
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    try:
        result = solve_allocation(problem, _solver_options(args))
    except InfeasibleAllocation as exc:
        print(json.dumps({"status": "infeasible", "report": exc.report}, indent=2))
        return EXIT_INFEASIBLE
    except AllocationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    names = problem.assets or tuple(f"asset{i}" for i in range(problem.size))
    stats = result.solver_stats
    doc = {
        "status": "optimal",
        "objective": result.objective,
        "weights": dict(zip(names, result.weights.tolist())),
        "risk_contributions": dict(zip(names, result.risk_contribs.tolist())),
        "binding_budgets": dict(zip(names, (bool(v) for v in result.binding_budgets))),
        "solver": {
            "iterations": stats.iterations,
            "primal_residual": stats.primal_residual,
            "dual_residual": stats.dual_residual,
            "relative_gap": stats.gap,
        },
    }
    print(json.dumps(doc, indent=2))
    rows = [["asset", "weight", "risk_contribution", "budget", "binding"]]
    for i, name in enumerate(names):
        rows.append([name, f"{result.weights[i]:.6f}", f"{result.risk_contribs[i]:.6f}",
                     f"{problem.budgets[i]:.6f}", "yes" if result.binding_budgets[i] else "no"])
    widths = [max(len(r[j]) for r in rows) for j in range(5)]
    for row in rows:
        print("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return EXIT_OK


def _parse_backtest_config(path: str):
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config: expected a JSON object")
    strategies = doc.get("strategies", list(STRATEGIES))
    if not isinstance(strategies, list) or not strategies:
        raise ValueError("config.strategies: expected a non-empty list")
    strategies = [normalize_strategy(s) for s in strategies]
    budgets = doc.get("budgets")
    if isinstance(budgets, list):
        budgets = np.asarray(budgets, dtype=float)
    kwargs = {
        "budgets": budgets,
        "lam": float(doc.get("lambda", 1.0)),
        "mu": float(doc.get("mu", 0.0)),
        "leverage_cap": float(doc.get("leverage_cap", 1.5)),
        "psd_eps": doc.get("psd_eps"),
    }
    return strategies, kwargs, doc


def cmd_backtest(args) -> int:
    try:
        with open(args.prices) as fh:
            daily = load_csv(fh, ticker=os.path.splitext(os.path.basename(args.prices))[0])
        panel = to_weekly(daily)
        strategies, cfg_kwargs, config_doc = _parse_backtest_config(args.config)
        if args.strategies:
            strategies = [normalize_strategy(s) for s in args.strategies.split(",")]
    except (OSError, json.JSONDecodeError, ValueError, ParseError, EmptyIntersection) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    os.makedirs(args.out_dir, exist_ok=True)
    solver_opts = _solver_options(args)
    ledgers = {}
    try:
        for strat in strategies:
            cfg = BacktestConfig(strategy=strat, solver_options=solver_opts, **cfg_kwargs)
            ledgers[strat] = run(panel, cfg)
    except (ValueError, AllocationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    for strat, ledger in ledgers.items():
        buf = io.StringIO()
        ledger_to_csv(ledger, buf)
        _atomic_write(os.path.join(args.out_dir, f"ledger_{strat}.csv"), buf.getvalue())

    stats = {s: summary(led) for s, led in ledgers.items()}
    # the 1.0 inception point shares the first ledger date as its label
    eps = {s: drawdowns(np.concatenate([[1.0], led.values]),
                        dates=[led.dates[0]] + list(led.dates))
           for s, led in ledgers.items()}
    dd_text = format_drawdown_table(eps, top=args.top)
    stats_text = format_summary_table(stats)
    _atomic_write(os.path.join(args.out_dir, "drawdowns.txt"), dd_text + "\n")
    _atomic_write(os.path.join(args.out_dir, "summary.txt"), stats_text + "\n")
    _atomic_write(os.path.join(args.out_dir, "drawdowns.csv"),
                  "\n".join(",".join(r) for r in drawdown_table_rows(eps, top=args.top)) + "\n")
    _atomic_write(os.path.join(args.out_dir, "summary.csv"),
                  "\n".join(",".join(r) for r in summary_table_rows(stats)) + "\n")

    manifest = {
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": config_doc,
        "strategies": list(ledgers),
        "inputs": {os.path.basename(args.prices): _sha256(args.prices),
                   os.path.basename(args.config): _sha256(args.config)},
        "panel": {"assets": list(panel.tickers), "weeks": panel.n_periods,
                  "start": panel.dates[0].isoformat(), "end": panel.dates[-1].isoformat()},
    }
    _atomic_write(os.path.join(args.out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2) + "\n")
    print(stats_text)
    print()
    print(dd_text)
    return EXIT_OK


def cmd_report(args) -> int:
    ledgers = {}
    try:
        for path in args.ledgers:
            name = os.path.splitext(os.path.basename(path))[0]
            if name.startswith("ledger_"):
                name = name[len("ledger_"):]
            ledgers[name] = ledger_from_csv(path, strategy=name)
    except (OSError, ValueError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    stats = {name: summary(led) for name, led in ledgers.items()}
    eps = {name: drawdowns(np.concatenate([[1.0], led.values]),
                           dates=[led.dates[0]] + list(led.dates))
           for name, led in ledgers.items()}
    dd_text = format_drawdown_table(eps, top=args.top)
    stats_text = format_summary_table(stats)
    print(stats_text)
    print()
    print(dd_text)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        _atomic_write(os.path.join(args.out_dir, "drawdowns.csv"),
                      "\n".join(",".join(r) for r in drawdown_table_rows(eps, top=args.top)) + "\n")
        _atomic_write(os.path.join(args.out_dir, "summary.csv"),
                      "\n".join(",".join(r) for r in summary_table_rows(stats)) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskbudget",
                                     description="Risk-budgeting portfolio toolkit")
    parser.add_argument("--version", action="version", version=f"riskbudget {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one allocation problem from JSON")
    p_solve.add_argument("--config", required=True, help="AllocationProblem JSON document")
    p_solve.add_argument("--tol", type=float, default=None, help="solver tolerance override")
    p_solve.add_argument("--max-iters", type=int, default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_bt = sub.add_parser("backtest", help="run strategies over a daily prices CSV")
    p_bt.add_argument("--prices", required=True, help="daily close prices CSV")
    p_bt.add_argument("--config", required=True, help="backtest config JSON")
    p_bt.add_argument("--out-dir", required=True, help="output directory")
    p_bt.add_argument("--strategies", default=None,
                      help="comma-separated subset, e.g. CRB,MRB,MRBAL")
    p_bt.add_argument("--top", type=int, default=5, help="drawdown ranks to report")
    p_bt.add_argument("--tol", type=float, default=None)
    p_bt.add_argument("--max-iters", type=int, default=None)
    p_bt.set_defaults(func=cmd_backtest)

    p_rep = sub.add_parser("report", help="summaries and drawdowns from ledger CSVs")
    p_rep.add_argument("ledgers", nargs="+", help="ledger CSV files")
    p_rep.add_argument("--top", type=int, default=5)
    p_rep.add_argument("--out-dir", default=None)
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("RISKBUDGET_LOG_LEVEL", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # defensive: never tracebacks for users
        log.debug("unhandled failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
