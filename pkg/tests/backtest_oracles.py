"""Shared independent oracles for backtest verification.

Everything here recomputes engine quantities from first principles (pure
Python arithmetic, numpy only for eigendecompositions in the repair
oracle) so ledger checks never reuse the engine's own code paths.
"""

from datetime import date, timedelta

import numpy as np

from riskbudget.data import WeeklyPanel


def fridays(start, k):
    return tuple(start + timedelta(weeks=i) for i in range(k))


def make_panel(prices, tickers=None):
    prices = np.asarray(prices, dtype=float)
    tickers = tickers or tuple(f"A{i}" for i in range(prices.shape[1]))
    return WeeklyPanel(dates=fridays(date(2022, 1, 7), prices.shape[0]),
                       tickers=tuple(tickers), prices=prices)


FIXTURE_PRICES = np.array([
    [100.0, 50.0],
    [102.0, 50.5],
    [103.5, 50.6],
    [105.0, 51.0],
    [101.0, 50.3],
    [104.5, 51.2],
])


def fixture_panel():
    return make_panel(FIXTURE_PRICES, tickers=("EQ", "BD"))


def oracle_repair(s, eps):
    w, v = np.linalg.eigh(0.5 * (s + s.T))
    return (v * np.maximum(w, eps)) @ v.T


def oracle_accounting(panel, weights_rows, mu, t0=3):
    """Recompute value/cost/turnover columns from target weights alone."""
    p = panel.prices
    n = p.shape[1]
    prev = [0.0] * n
    value = 1.0
    values, costs, turnovers = [], [], []
    for k, t in enumerate(range(t0, p.shape[0])):
        wr = [p[t, i] / p[t - 1, i] - 1.0 for i in range(n)]
        growth = 1.0 + sum(prev[i] * wr[i] for i in range(n))
        value *= growth
        drifted = [prev[i] * (1.0 + wr[i]) / growth for i in range(n)] if growth > 0 else [0.0] * n
        target = [float(w) for w in weights_rows[k]]
        turn = sum(abs(target[i] - drifted[i]) for i in range(n))
        cost = mu * turn * value
        value -= cost
        values.append(value)
        costs.append(cost)
        turnovers.append(turn)
        prev = target
    return np.array(values), np.array(costs), np.array(turnovers)


def oracle_decisions(panel, strategy, mu, psd_eps, cap=1.5):
    """Closed-form per-period targets for the 2-asset equal-budget fixture."""
    p = panel.prices
    rets = p[1:] / p[:-1] - 1.0
    out = []
    for t in range(3, p.shape[0]):
        hist = rets[: t - 1]
        forecast = rets[t - 2]
        cum = p[t - 1] / p[0] - 1.0
        if strategy == "CRB":
            out.append((np.array([0.5, 0.5]), 1.0, False))
            continue
        if strategy == "CRB_SMART":
            pos = np.maximum(cum, 0.0)
            w = pos / pos.sum() if pos.sum() > 0 else np.array([0.5, 0.5])
            out.append((w, 1.0, False))
            continue
        cov = np.cov(hist.T, ddof=1)
        if np.linalg.eigvalsh(cov)[0] < psd_eps:
            cov = oracle_repair(cov, psd_eps)
        s1, s2 = np.sqrt(cov[0, 0]), np.sqrt(cov[1, 1])
        x = np.array([s2, s1]) / (s1 + s2)  # two-asset equal-budget closed form
        if strategy == "MRB":
            out.append((x, 1.0, False))
            continue
        if forecast @ x < 0:
            out.append((np.zeros(2), 0.0, True))
            continue
        if strategy == "MRBA":
            out.append((x, 1.0, False))
            continue
        eq = np.array([0.5, 0.5])
        lev = min(cap, np.sqrt(eq @ cov @ eq) / np.sqrt(x @ cov @ x))
        out.append((lev * x, lev, False))
    return out
