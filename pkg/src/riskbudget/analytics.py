"""Performance analytics over equity curves and backtest ledgers.

Drawdown episodes are peak-to-recovery windows: an episode opens when the
curve drops below its running peak, troughs at the window minimum, and
closes at the first value that reaches the old peak (or at the series end
when never recovered). Summary statistics treat the ledger's value column
as an equity curve starting from 1.0 at inception, with weekly cadence
(52 periods/year) for annualization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backtest import BacktestLedger

__all__ = [
    "EmptySeries",
    "DrawdownEpisode",
    "SummaryStats",
    "drawdowns",
    "top_drawdowns",
    "summary",
    "format_drawdown_table",
    "format_summary_table",
    "drawdown_table_rows",
    "summary_table_rows",
]

WEEKS_PER_YEAR = 52


class EmptySeries(Exception):
    """An equity curve needs at least two points."""


@dataclass(frozen=True)
class DrawdownEpisode:
    """One peak-to-recovery window; depth is the fraction of peak lost."""

    from_date: object
    trough_date: object
    to_date: object
    depth: float


@dataclass(frozen=True)
class SummaryStats:
    total_return: float
    annualized_vol: float
    max_drawdown: float
    total_turnover: float
    total_cost: float
    n_periods: int


def drawdowns(values, dates: Sequence | None = None) -> list[DrawdownEpisode]:
    """All drawdown episodes of a positive equity curve, in time order.

    ``dates`` labels the points (indices when omitted). Unrecovered
    drawdowns at the series end are reported with ``to_date`` equal to the
    last label.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise EmptySeries(f"need at least 2 points, got {v.size}")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("equity curve values must be positive and finite")
    labels = list(dates) if dates is not None else list(range(v.size))
    if len(labels) != v.size:
        raise ValueError(f"{len(labels)} labels for {v.size} values")

    episodes: list[DrawdownEpisode] = []
    peak = 0
    trough = None
    for t in range(1, v.size):
        if v[t] >= v[peak]:
            if trough is not None:
                episodes.append(DrawdownEpisode(labels[peak], labels[trough], labels[t],
                                                1.0 - v[trough] / v[peak]))
                trough = None
            peak = t
        else:
            if trough is None or v[t] < v[trough]:
                trough = t
    if trough is not None:
        episodes.append(DrawdownEpisode(labels[peak], labels[trough], labels[v.size - 1],
                                        1.0 - v[trough] / v[peak]))
    return episodes


def top_drawdowns(episodes: Sequence[DrawdownEpisode], k: int = 5) -> list[DrawdownEpisode]:
    """The k deepest episodes, depth descending."""
    return sorted(episodes, key=lambda ep: ep.depth, reverse=True)[:k]


def summary(ledger: BacktestLedger) -> SummaryStats:
    """Headline statistics of one ledger; the curve starts at 1.0."""
    curve = np.concatenate([[1.0], ledger.values])
    rets = curve[1:] / curve[:-1] - 1.0
    vol = float(np.std(rets, ddof=1)) * np.sqrt(WEEKS_PER_YEAR) if rets.size >= 2 else 0.0
    eps = drawdowns(curve)
    max_dd = max((ep.depth for ep in eps), default=0.0)
    return SummaryStats(
        total_return=float(curve[-1] / curve[0] - 1.0),
        annualized_vol=vol,
        max_drawdown=float(max_dd),
        total_turnover=float(ledger.turnover.sum()),
        total_cost=float(ledger.costs.sum()),
        n_periods=ledger.n_periods,
    )


def drawdown_table_rows(episodes_by_name: dict[str, Sequence[DrawdownEpisode]],
                        top: int = 5, decimals: int = 3) -> list[list[str]]:
    """Rank-by-strategy rows: header then one row per rank (depth text)."""
    names = list(episodes_by_name)
    ranked = {name: top_drawdowns(eps, top) for name, eps in episodes_by_name.items()}
    rows = [["rank"] + [f"DD.{name}" for name in names]]
    for i in range(top):
        row = [str(i + 1)]
        for name in names:
            eps = ranked[name]
            row.append(f"{eps[i].depth:.{decimals}f}" if i < len(eps) else "")
        rows.append(row)
    return rows


def summary_table_rows(stats_by_name: dict[str, SummaryStats]) -> list[list[str]]:
    rows = [["stat"] + list(stats_by_name)]
    fields = [("total_return", "{:.4f}"), ("annualized_vol", "{:.4f}"),
              ("max_drawdown", "{:.4f}"), ("total_turnover", "{:.4f}"),
              ("total_cost", "{:.6f}"), ("n_periods", "{:d}")]
    for field_name, fmt in fields:
        rows.append([field_name] + [fmt.format(getattr(s, field_name))
                                    for s in stats_by_name.values()])
    return rows


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(r[j]) for r in rows) for j in range(len(rows[0]))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows)


def format_drawdown_table(episodes_by_name, top: int = 5, decimals: int = 3) -> str:
    """Aligned text table, one column per strategy, depths sorted descending."""
    return _align(drawdown_table_rows(episodes_by_name, top, decimals))


def format_summary_table(stats_by_name) -> str:
    return _align(summary_table_rows(stats_by_name))
