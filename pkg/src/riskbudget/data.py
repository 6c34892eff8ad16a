"""Price data ingestion and weekly resampling.

Daily close prices come in as CSV (either a long file with header
``date,ticker,close`` or one file per ticker with header ``date,close``)
and leave as an aligned weekly panel: one price per ISO week per asset,
the week's lower median close, labeled by that week's Friday. Weeks
missing for any asset are dropped for all assets, so the panel has no
holes. Simple returns feed the covariance and momentum machinery.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import date

import numpy as np

__all__ = [
    "ParseError",
    "EmptyIntersection",
    "PriceSeries",
    "WeeklyPanel",
    "load_csv",
    "to_weekly",
    "returns",
    "panel_to_csv",
    "panel_from_csv",
]


class ParseError(Exception):
    """CSV defect; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class EmptyIntersection(Exception):
    """No ISO week is covered by every asset."""


@dataclass(frozen=True)
class PriceSeries:
    ticker: str
    dates: tuple[date, ...]
    closes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "closes", np.asarray(self.closes, dtype=float))


@dataclass(frozen=True)
class WeeklyPanel:
    """Aligned weekly median prices: ``prices[t, i]`` for week t, asset i."""

    dates: tuple[date, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if p.shape != (len(self.dates), len(self.tickers)):
            raise ValueError(f"prices shape {p.shape} does not match "
                             f"{len(self.dates)} weeks x {len(self.tickers)} assets")
        if any(b >= a for a, b in zip(self.dates[1:], self.dates)):
            raise ValueError("dates must be strictly increasing")
        if not np.all(p > 0):
            raise ValueError("all prices must be positive")

    @property
    def n_periods(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.tickers)


def _open(source):
    if hasattr(source, "read"):
        return source, None
    return open(source, "r", newline=""), os.path.splitext(os.path.basename(str(source)))[0]


def load_csv(source, ticker: str | None = None) -> dict[str, PriceSeries]:
    """Parse daily close prices from CSV.

    Accepts the long format (header ``date,ticker,close``) or the
    single-asset format (header ``date,close``); for the latter the asset
    name comes from ``ticker`` or, for file paths, the file stem. Dates
    are ISO-8601. Rows are sorted by date per ticker; duplicate
    (date, ticker) pairs and non-positive prices are rejected with the
    offending line number.
    """
    fh, stem = _open(source)
    try:
        header = fh.readline()
        if not header.strip():
            raise ParseError("empty input, expected a header row", line=1)
        cols = [c.strip().lower() for c in header.strip().split(",")]
        if cols == ["date", "ticker", "close"]:
            long_format = True
        elif cols == ["date", "close"]:
            long_format = False
            ticker = ticker or stem
            if not ticker:
                raise ParseError("single-asset format needs a ticker name "
                                 "(pass ticker= or load from a named file)", line=1)
        else:
            raise ParseError(f"unrecognized header {header.strip()!r}, expected "
                             "'date,ticker,close' or 'date,close'", line=1)

        rows: dict[str, list[tuple[date, float]]] = {}
        seen: set[tuple[str, date]] = set()
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            parts = [p.strip() for p in raw.strip().split(",")]
            if len(parts) != (3 if long_format else 2):
                raise ParseError(f"expected {3 if long_format else 2} columns, got {len(parts)}",
                                 line=lineno)
            try:
                day = date.fromisoformat(parts[0])
            except ValueError:
                raise ParseError(f"bad date {parts[0]!r}", line=lineno) from None
            name = parts[1] if long_format else ticker
            try:
                close = float(parts[-1])
            except ValueError:
                raise ParseError(f"bad price {parts[-1]!r}", line=lineno) from None
            if not np.isfinite(close) or close <= 0:
                raise ParseError(f"non-positive price {parts[-1]!r} for {name}", line=lineno)
            if (name, day) in seen:
                raise ParseError(f"duplicate row for {name} on {day.isoformat()}", line=lineno)
            seen.add((name, day))
            rows.setdefault(name, []).append((day, close))
    finally:
        if not hasattr(source, "read"):
            fh.close()

    if not rows:
        raise ParseError("no data rows found")
    out = {}
    for name, pairs in rows.items():
        pairs.sort(key=lambda dp: dp[0])
        out[name] = PriceSeries(ticker=name,
                                dates=tuple(d for d, _ in pairs),
                                closes=np.array([p for _, p in pairs]))
    return out


def _lower_median(values: list[float]) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def to_weekly(daily: dict[str, PriceSeries]) -> WeeklyPanel:
    """Resample daily closes to one lower-median price per ISO week.

    The panel is restricted to ISO weeks covered by every asset; the week
    label is that ISO week's Friday. Raises :class:`EmptyIntersection`
    when no common week exists.
    """
    if not daily:
        raise EmptyIntersection("no assets supplied")
    per_asset: dict[str, dict[tuple[int, int], float]] = {}
    for name, series in daily.items():
        buckets: dict[tuple[int, int], list[float]] = {}
        for day, close in zip(series.dates, series.closes):
            iso = day.isocalendar()
            buckets.setdefault((iso[0], iso[1]), []).append(float(close))
        per_asset[name] = {week: _lower_median(vals) for week, vals in buckets.items()}

    tickers = sorted(per_asset)
    common = set.intersection(*(set(w) for w in per_asset.values()))
    if not common:
        raise EmptyIntersection("assets share no ISO week")
    weeks = sorted(common)
    labels = tuple(date.fromisocalendar(y, w, 5) for y, w in weeks)
    prices = np.array([[per_asset[t][wk] for t in tickers] for wk in weeks])
    return WeeklyPanel(dates=labels, tickers=tuple(tickers), prices=prices)


def returns(panel: WeeklyPanel) -> np.ndarray:
    """Simple week-over-week returns, shape ``(n_periods - 1, n_assets)``."""
    p = panel.prices
    return p[1:] / p[:-1] - 1.0


def panel_to_csv(panel: WeeklyPanel, destination) -> None:
    """Write the wide format ``date,T1,...,TN``; floats keep full precision."""
    own = not hasattr(destination, "write")
    fh = open(destination, "w", newline="") if own else destination
    try:
        fh.write("date," + ",".join(panel.tickers) + "\n")
        for day, row in zip(panel.dates, panel.prices):
            fh.write(day.isoformat() + "," + ",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if own:
            fh.close()


def panel_from_csv(source) -> WeeklyPanel:
    """Read the wide format written by :func:`panel_to_csv` (bit-exact)."""
    fh, _ = _open(source)
    try:
        header = fh.readline().strip()
        cols = header.split(",")
        if len(cols) < 2 or cols[0].strip().lower() != "date":
            raise ParseError(f"unrecognized panel header {header!r}", line=1)
        tickers = tuple(c.strip() for c in cols[1:])
        dates, rows = [], []
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            parts = raw.strip().split(",")
            if len(parts) != len(tickers) + 1:
                raise ParseError(f"expected {len(tickers) + 1} columns, got {len(parts)}",
                                 line=lineno)
            try:
                dates.append(date.fromisoformat(parts[0]))
                rows.append([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    finally:
        if not hasattr(source, "read"):
            fh.close()
    if not rows:
        raise ParseError("no data rows found")
    return WeeklyPanel(dates=tuple(dates), tickers=tickers, prices=np.array(rows))
