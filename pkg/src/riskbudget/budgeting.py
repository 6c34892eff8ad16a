"""Classical risk-budget weights via the log-barrier objective.

Minimizing ``0.5 x'Cx - sum_i b_i log x_i`` over positive x makes the
stationarity conditions coincide with the risk-budget equations, so the
minimizer (rescaled to the simplex) allocates each asset exactly its
budgeted share of portfolio variance. Solved by damped Newton steps with a
closed-form cyclic coordinate-descent fallback when Newton stalls.
"""

from __future__ import annotations

import numpy as np

from .linalg import cholesky

__all__ = [
    "NonConvergence",
    "DegeneratePortfolio",
    "solve_vanilla",
    "risk_contributions",
]


class NonConvergence(Exception):
    """Iteration budget exhausted before the stationarity residual fell below tol."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"no convergence after {iterations} iterations (residual {residual:.3e})")


class DegeneratePortfolio(Exception):
    """Portfolio variance is not positive; contributions are undefined."""


def _validate_budgets(budgets) -> np.ndarray:
    b = np.asarray(budgets, dtype=float).ravel()
    if np.any(b <= 0):
        raise ValueError("all budgets must be strictly positive; drop zero-budget assets first")
    if abs(b.sum() - 1.0) > 1e-8:
        raise ValueError(f"budgets must sum to 1, got {b.sum()!r}")
    return b


def solve_vanilla(cov, budgets, tol: float = 1e-10, max_iters: int = 200) -> np.ndarray:
    """Long-only weights whose risk contributions equal ``budgets``.

    Parameters
    ----------
    cov : (n, n) array_like
        Positive definite covariance matrix.
    budgets : (n,) array_like
        Strictly positive budgets summing to 1.
    tol : float
        Stationarity tolerance: iteration stops once
        ``|(Cx)_i - b_i / x_i| <= tol * (1 + max|Cx|)`` for all i, checked
        before the final rescaling.

    Returns
    -------
    (n,) ndarray
        Weights on the simplex (sum 1, all positive). Only the rescaled
        weights are exposed; the unit-variance intermediate solution of
        the barrier problem is internal.

    Raises
    ------
    NotPositiveDefinite
        If ``cov`` fails its Cholesky factorization.
    NonConvergence
        If the residual never reaches ``tol``.
    """
    c = np.asarray(cov, dtype=float)
    b = _validate_budgets(budgets)
    if c.shape != (b.size, b.size):
        raise ValueError(f"cov shape {c.shape} does not match {b.size} budgets")
    cholesky(c)  # positive definiteness gate
    # normalize the variance scale: the stationarity conditions are scale
    # invariant and an O(1) matrix keeps the Newton arithmetic well away
    # from the floating-point noise floor
    c = c / float(np.mean(np.diag(c)))

    def objective(v):
        return 0.5 * v @ c @ v - b @ np.log(v)

    x = np.sqrt(b) / np.sqrt(np.diag(c))
    cx = c @ x
    for it in range(max_iters):
        grad = cx - b / x
        residual = float(np.abs(grad).max())
        if residual <= tol * (1.0 + float(np.abs(cx).max())):
            return x / x.sum()

        hess = c + np.diag(b / x**2)
        step = -np.linalg.solve(hess, grad)
        alpha = 1.0
        while np.any(x + alpha * step <= 0):
            alpha *= 0.5
        f0 = objective(x)
        gs = grad @ step
        # the rounding allowance keeps the endgame from rejecting full
        # Newton steps whose true decrease is below float resolution
        noise = 16.0 * np.finfo(float).eps * (1.0 + abs(f0))
        stalled = False
        while objective(x + alpha * step) > f0 + 1e-4 * alpha * gs + noise:
            alpha *= 0.5
            if alpha < 1e-12:
                stalled = True
                break
        if stalled:
            # cyclic coordinate descent: each update solves the scalar
            # quadratic C_ii x_i^2 + r_i x_i - b_i = 0 in closed form
            for i in range(b.size):
                r_i = cx[i] - c[i, i] * x[i]
                new = (-r_i + np.sqrt(r_i * r_i + 4.0 * c[i, i] * b[i])) / (2.0 * c[i, i])
                cx += c[:, i] * (new - x[i])
                x[i] = new
        else:
            x = x + alpha * step
            cx = c @ x

    grad = c @ x - b / x
    raise NonConvergence(max_iters, float(np.abs(grad).max()))


def risk_contributions(cov, weights) -> np.ndarray:
    """Fractional variance contributions ``x_i (Cx)_i / x'Cx``; sums to 1."""
    c = np.asarray(cov, dtype=float)
    x = np.asarray(weights, dtype=float).ravel()
    cx = c @ x
    total = x @ cx
    if total <= 0:
        raise DegeneratePortfolio(f"portfolio variance {total!r} is not positive")
    return x * cx / total
