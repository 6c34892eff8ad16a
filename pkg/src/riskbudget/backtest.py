"""Weekly-rebalance backtest engine.

Five strategies over an aligned weekly panel: CRB (equal-weight constant
rebalance), CRB.SMART (weights proportional to positive cumulative
returns), MRB (risk-budget floors with a one-week momentum forecast),
MRBA (MRB plus liquidation whenever the forecast portfolio return is
negative), and MRBAL (MRBA levered by the ratio of the benchmark's
ex-ante volatility to the optimized portfolio's, capped).

Timing discipline: the decision for the fill at week ``t`` sees prices
only through week ``t-1`` - covariance from all weekly returns realized by
then (expanding window), forecast equal to the return over week ``t-1``,
cumulative returns through ``t-1``. Fills happen at week ``t``'s median
price, which is exactly the panel price. Holdings drift with asset
returns between rebalances; turnover and proportional costs are measured
against the drifted weights. Cash earns nothing and leverage is financed
at zero rate (documented simplification).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from .allocation import AllocationError, AllocationProblem, solve_allocation
from .data import WeeklyPanel, returns as panel_returns
from .linalg import NotPositiveDefinite, covariance, symmetric_eig
from .solver import SolverOptions

__all__ = [
    "STRATEGIES",
    "HALF_NORM_CUM_RETURN",
    "BacktestConfig",
    "BacktestLedger",
    "EngineState",
    "run",
    "strategy_weights",
    "budget_rule_half_norm",
    "benchmark_crb_smart",
    "prepare_covariance",
    "ledger_to_csv",
    "ledger_from_csv",
]

STRATEGIES = ("CRB", "CRB_SMART", "MRB", "MRBA", "MRBAL")
HALF_NORM_CUM_RETURN = "half_norm_cum_return"

# first tradeable index: one week for the momentum forecast plus two
# realized returns for the first covariance estimate
FIRST_DECISION = 3

# engine-level solver default: 1e-7 formal tolerance is far beyond what
# weekly fills resolve, and avoids spurious abstentions from the interior
# point method's last-digit fragility at 1e-8 on point-in-time matrices
DEFAULT_SOLVER_OPTIONS = SolverOptions(tol_feas=1e-7, tol_gap=1e-7, tol_cone=1e-7)


def normalize_strategy(name: str) -> str:
    norm = str(name).upper().replace(".", "_").replace("-", "_")
    if norm not in STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}, expected one of {STRATEGIES}")
    return norm


@dataclass
class BacktestConfig:
    """Knobs for one strategy run.

    ``budgets`` is either a fixed per-asset vector (sum <= 1) or the
    string ``"half_norm_cum_return"`` for floors set to half of each
    asset's cross-sectionally normalized positive cumulative return.
    ``psd_eps`` is the eigenvalue floor used when the point-in-time
    covariance needs repair; default scales with the mean variance.
    """

    strategy: str = "MRB"
    budgets: np.ndarray | str | None = None
    lam: float = 1.0
    mu: float = 0.0
    leverage_cap: float = 1.5
    psd_eps: float | None = None
    solver_options: SolverOptions | None = None

    def __post_init__(self):
        self.strategy = normalize_strategy(self.strategy)
        if self.leverage_cap < 1:
            raise ValueError("leverage_cap must be >= 1")
        if self.lam < 0 or self.mu < 0:
            raise ValueError("lam and mu must be nonnegative")
        if isinstance(self.budgets, str):
            if self.budgets != HALF_NORM_CUM_RETURN:
                raise ValueError(f"unknown budget rule {self.budgets!r}")
        elif self.budgets is not None:
            self.budgets = np.asarray(self.budgets, dtype=float).ravel()
            if np.any(self.budgets < 0) or self.budgets.sum() > 1.0 + 1e-12:
                raise ValueError("budgets must be nonnegative and sum to at most 1")
        if self.strategy not in ("CRB", "CRB_SMART") and self.budgets is None:
            raise ValueError(f"{self.strategy} requires budgets (vector or "
                             f"{HALF_NORM_CUM_RETURN!r})")


@dataclass
class EngineState:
    """Decision inputs for one rebalance, all measured strictly pre-fill."""

    t: int
    decision_date: date
    cov: np.ndarray
    forecast: np.ndarray
    cum_returns: np.ndarray
    prev_weights: np.ndarray
    tickers: tuple[str, ...]


@dataclass
class BacktestLedger:
    """Per-period record of one strategy run; values start from 1.0."""

    strategy: str
    tickers: tuple[str, ...]
    dates: tuple[date, ...]
    weights: np.ndarray
    fill_prices: np.ndarray | None
    values: np.ndarray
    leverage: np.ndarray
    costs: np.ndarray
    turnover: np.ndarray
    abstained: np.ndarray
    notes: tuple[str, ...] = ()

    @property
    def n_periods(self) -> int:
        return len(self.dates)


def budget_rule_half_norm(cum_returns) -> np.ndarray:
    """Floors = half the normalized positive part of cumulative returns.

    Negative cumulative returns clamp to zero before normalizing; if every
    asset is nonpositive the floors fall back to uniform 1/(2n). The
    output always sums to one half.
    """
    cum = np.asarray(cum_returns, dtype=float).ravel()
    pos = np.maximum(cum, 0.0)
    total = pos.sum()
    if total <= 0:
        return np.full(cum.size, 0.5 / cum.size)
    return 0.5 * pos / total


def benchmark_crb_smart(cum_returns) -> np.ndarray:
    """Weights proportional to positive cumulative returns, summing to 1."""
    cum = np.asarray(cum_returns, dtype=float).ravel()
    pos = np.maximum(cum, 0.0)
    total = pos.sum()
    if total <= 0:
        return np.full(cum.size, 1.0 / cum.size)
    return pos / total


def prepare_covariance(history, psd_eps: float | None = None) -> np.ndarray:
    """Point-in-time sample covariance, repaired to be usable if needed.

    The sample covariance is used as-is when its smallest eigenvalue
    clears the floor (default ``1e-8 *`` mean variance), else the
    eigenvalues below the floor are lifted to it - the nearest positive
    semidefinite matrix under the floor. Rank deficiency is routine while
    the history is shorter than the asset count; gating on the spectrum
    rather than a factorization attempt keeps the decision independent of
    asset ordering and roundoff luck.
    """
    s = covariance(history)
    eps = psd_eps if psd_eps is not None else 1e-8 * float(np.mean(np.diag(s)))
    eps = max(eps, 1e-16)
    w, v = symmetric_eig(s)
    if w[0] >= eps:
        return s
    out = (v * np.maximum(w, eps)) @ v.T
    return 0.5 * (out + out.T)


def strategy_weights(t: int, state: EngineState, cfg: BacktestConfig) -> tuple[np.ndarray, float]:
    """Target weights and applied leverage for the fill at index ``t``.

    Abstention is reported as all-zero weights with leverage 0. Solver
    errors propagate; the engine converts them to abstained periods.
    """
    n = len(state.tickers)
    equal = np.full(n, 1.0 / n)
    if cfg.strategy == "CRB":
        return equal, 1.0
    if cfg.strategy == "CRB_SMART":
        return benchmark_crb_smart(state.cum_returns), 1.0

    if isinstance(cfg.budgets, str):
        budgets = budget_rule_half_norm(state.cum_returns)
    else:
        budgets = cfg.budgets
    problem = AllocationProblem(
        cov=state.cov,
        budgets=budgets,
        forecasts=state.forecast,
        lam=cfg.lam,
        mu=cfg.mu,
        prev_weights=state.prev_weights,
        assets=state.tickers,
    )
    opts = cfg.solver_options if cfg.solver_options is not None else DEFAULT_SOLVER_OPTIONS
    x = solve_allocation(problem, opts).weights
    if cfg.strategy == "MRB":
        return x, 1.0

    if float(state.forecast @ x) < 0.0:
        return np.zeros(n), 0.0
    if cfg.strategy == "MRBA":
        return x, 1.0

    sd_crb = float(np.sqrt(max(equal @ state.cov @ equal, 0.0)))
    sd_mrb = float(np.sqrt(max(x @ state.cov @ x, 0.0)))
    lev = min(cfg.leverage_cap, sd_crb / sd_mrb) if sd_mrb > 0 else 1.0
    return lev * x, lev


def run(panel: WeeklyPanel, cfg: BacktestConfig) -> BacktestLedger:
    """Simulate one strategy over the panel; deterministic.

    The ledger covers fills from the first index with enough history
    (index 3: one week for the momentum forecast, two realized returns
    for the covariance). Infeasible or failed optimizations abstain for
    that period and carry a diagnostic note.
    """
    if panel.n_periods < FIRST_DECISION + 1:
        raise ValueError(f"panel must cover at least {FIRST_DECISION + 1} weekly prices "
                         f"({FIRST_DECISION} return periods), got {panel.n_periods}")
    rets = panel_returns(panel)
    n = panel.n_assets

    dates, weights_rows, fills, values, levs, costs, turns, abst, notes = \
        [], [], [], [], [], [], [], [], []
    prev_w = np.zeros(n)
    value = 1.0
    for t in range(FIRST_DECISION, panel.n_periods):
        week_ret = rets[t - 1]
        growth = 1.0 + float(prev_w @ week_ret)
        value *= growth
        drifted = prev_w * (1.0 + week_ret) / growth if growth > 0 else np.zeros(n)

        history = rets[: t - 1]
        state = EngineState(
            t=t,
            decision_date=panel.dates[t - 1],
            cov=prepare_covariance(history, cfg.psd_eps),
            forecast=rets[t - 2],
            cum_returns=panel.prices[t - 1] / panel.prices[0] - 1.0,
            prev_weights=drifted,
            tickers=panel.tickers,
        )
        note = ""
        try:
            target, lev = strategy_weights(t, state, cfg)
        except (AllocationError, NotPositiveDefinite) as exc:
            target, lev = np.zeros(n), 0.0
            note = f"abstained: {exc}"

        turnover = float(np.abs(target - drifted).sum())
        cost = cfg.mu * turnover * value
        value -= cost

        dates.append(panel.dates[t])
        weights_rows.append(target)
        fills.append(panel.prices[t])
        values.append(value)
        levs.append(lev if np.any(target) else 0.0)
        costs.append(cost)
        turns.append(turnover)
        abst.append(not np.any(target))
        notes.append(note)
        prev_w = target

    return BacktestLedger(
        strategy=cfg.strategy,
        tickers=panel.tickers,
        dates=tuple(dates),
        weights=np.array(weights_rows),
        fill_prices=np.array(fills),
        values=np.array(values),
        leverage=np.array(levs),
        costs=np.array(costs),
        turnover=np.array(turns),
        abstained=np.array(abst, dtype=bool),
        notes=tuple(notes),
    )


def ledger_to_csv(ledger: BacktestLedger, destination) -> None:
    """Columns: date, value, one weight column per asset, leverage, cost,
    turnover, abstained."""
    own = not hasattr(destination, "write")
    fh = open(destination, "w", newline="") if own else destination
    try:
        cols = ["date", "value"] + [f"w_{t}" for t in ledger.tickers] + \
            ["leverage", "cost", "turnover", "abstained"]
        fh.write(",".join(cols) + "\n")
        for i, day in enumerate(ledger.dates):
            row = [day.isoformat(), repr(float(ledger.values[i]))]
            row += [repr(float(w)) for w in ledger.weights[i]]
            row += [repr(float(ledger.leverage[i])), repr(float(ledger.costs[i])),
                    repr(float(ledger.turnover[i])), str(bool(ledger.abstained[i]))]
            fh.write(",".join(row) + "\n")
    finally:
        if own:
            fh.close()


def ledger_from_csv(source, strategy: str = "") -> BacktestLedger:
    """Rebuild a ledger from :func:`ledger_to_csv` output (prices excluded)."""
    own = not hasattr(source, "read")
    fh = open(source, "r", newline="") if own else source
    try:
        header = fh.readline().strip().split(",")
        if header[:2] != ["date", "value"] or header[-4:] != ["leverage", "cost", "turnover", "abstained"]:
            raise ValueError(f"unrecognized ledger header {header!r}")
        tickers = tuple(c[2:] for c in header[2:-4])
        dates, weights, values, levs, costs, turns, abst = [], [], [], [], [], [], []
        for raw in fh:
            if not raw.strip():
                continue
            parts = raw.strip().split(",")
            dates.append(date.fromisoformat(parts[0]))
            values.append(float(parts[1]))
            weights.append([float(v) for v in parts[2 : 2 + len(tickers)]])
            levs.append(float(parts[-4]))
            costs.append(float(parts[-3]))
            turns.append(float(parts[-2]))
            abst.append(parts[-1] == "True")
    finally:
        if own:
            fh.close()
    return BacktestLedger(
        strategy=strategy,
        tickers=tickers,
        dates=tuple(dates),
        weights=np.array(weights),
        fill_prices=None,
        values=np.array(values),
        leverage=np.array(levs),
        costs=np.array(costs),
        turnover=np.array(turns),
        abstained=np.array(abst, dtype=bool),
    )
