"""Generalized risk-budget allocation as a second-order cone program.

Builds and solves: minimize ``-r'x + lam*||Rx|| + mu*||x - x0||_1`` over
long-only weights on the simplex with bounds ``l <= x <= u``, subject to a
floor on each asset's share of portfolio variance. Each floor becomes one
second-order cone row block ``||(x_i - (Cx)_i, 2 sqrt(b_i) Rx)|| <=
x_i + (Cx)_i`` (hyperbolic constraint in rotated-cone form), with R the
upper Cholesky factor of C. The norm objective term is handled through an
epigraph variable and the turnover term through a positive/negative split.

When the floors sum to exactly 1, every floor binds at the optimum and the
solution coincides with the classical risk-budget weights regardless of
forecasts, which is cross-checked against the log-barrier route in the
test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .budgeting import risk_contributions
from .cones import NonNeg, SecondOrder, Zero
from .linalg import cholesky
from .solver import ConeProgram, ConeSolution, SolveStatus, SolverOptions, solve

__all__ = [
    "AllocationProblem",
    "AllocationResult",
    "AllocationError",
    "InfeasibleAllocation",
    "SolverFailure",
    "build_program",
    "solve_allocation",
    "expected_stats",
    "problem_to_json",
    "problem_from_json",
]

BINDING_TOL = 1e-6


class AllocationError(Exception):
    """Base class for allocation failures."""


class InfeasibleAllocation(AllocationError):
    """The budgets/bounds admit no feasible portfolio; ``report`` lists hints."""

    def __init__(self, report: list[str]):
        self.report = report
        super().__init__("infeasible allocation: " + "; ".join(report))


class SolverFailure(AllocationError):
    """The cone solver stopped without an optimal point or a certificate."""

    def __init__(self, status: SolveStatus, detail: str = ""):
        self.status = status
        super().__init__(f"solver stopped with status {status.value}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class AllocationProblem:
    """One allocation instance.

    ``cov`` is the asset covariance (positive definite), ``forecasts`` the
    expected simple returns per period, ``lam`` the mean-variance
    trade-off, ``mu`` the proportional cost per unit turnover against
    ``prev_weights``, ``lower``/``upper`` the weight bounds (upper may hold
    +inf), and ``budgets`` the per-asset floors on the fractional risk
    contribution, summing to at most 1.
    """

    cov: np.ndarray
    budgets: np.ndarray
    forecasts: np.ndarray | None = None
    lam: float = 1.0
    mu: float = 0.0
    prev_weights: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    assets: tuple[str, ...] | None = None

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        n = cov.shape[0] if cov.ndim == 2 else 0
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "budgets", np.asarray(self.budgets, dtype=float).ravel())

        def vec(name, value, default):
            out = np.full(n, default) if value is None else np.asarray(value, dtype=float).ravel()
            object.__setattr__(self, name, out)

        vec("forecasts", self.forecasts, 0.0)
        vec("prev_weights", self.prev_weights, 0.0)
        vec("lower", self.lower, 0.0)
        vec("upper", self.upper, 1.0)
        if self.assets is not None:
            object.__setattr__(self, "assets", tuple(self.assets))

    @property
    def size(self) -> int:
        return self.budgets.size

    def asset_name(self, i: int) -> str:
        return self.assets[i] if self.assets else f"asset {i}"

    def validate(self) -> None:
        n = self.size
        if self.cov.ndim != 2 or self.cov.shape != (n, n):
            raise ValueError(f"cov shape {self.cov.shape} does not match {n} budgets")
        if not np.allclose(self.cov, self.cov.T, atol=1e-12):
            raise ValueError("cov must be symmetric")
        for name in ("forecasts", "prev_weights", "lower", "upper"):
            v = getattr(self, name)
            if v.size != n:
                raise ValueError(f"{name} has {v.size} entries, expected {n}")
        if self.assets is not None and len(self.assets) != n:
            raise ValueError(f"assets has {len(self.assets)} names, expected {n}")
        if np.any(self.budgets < 0):
            raise ValueError("budgets must be nonnegative")
        if self.budgets.sum() > 1.0 + 1e-12:
            raise ValueError(f"budgets sum to {self.budgets.sum()!r} > 1")
        if np.any(self.lower < 0) or np.any(self.upper < self.lower):
            raise ValueError("bounds must satisfy 0 <= lower <= upper")
        if self.lam < 0 or self.mu < 0:
            raise ValueError("lam and mu must be nonnegative")
        arrays = [self.cov, self.budgets, self.forecasts, self.prev_weights, self.lower]
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ValueError("non-finite entries in problem data")
        if np.any(np.isnan(self.upper)):
            raise ValueError("non-finite entries in problem data")


@dataclass
class AllocationResult:
    weights: np.ndarray
    objective: float
    risk_contribs: np.ndarray
    binding_budgets: np.ndarray
    solver_stats: ConeSolution


def build_program(problem: AllocationProblem) -> ConeProgram:
    """Encode the allocation instance in solver standard form.

    Variables are ``(x, t, d+, d-)``: the epigraph scalar ``t`` appears
    only when ``lam > 0``, the turnover split columns only when ``mu > 0``.
    Each asset contributes one second-order block of dimension n+2; the
    intermediate products ``Cx`` and ``Rx`` are substituted directly into
    the cone rows rather than materialized as variables.
    """
    problem.validate()
    c = problem.cov
    n = problem.size
    upper = cholesky(c)
    has_t = problem.lam > 0
    has_d = problem.mu > 0

    nv = n + (1 if has_t else 0) + (2 * n if has_d else 0)
    t_col = n
    d_col = n + (1 if has_t else 0)

    obj = np.zeros(nv)
    obj[:n] = -problem.forecasts
    if has_t:
        obj[t_col] = problem.lam
    if has_d:
        obj[d_col:] = problem.mu

    rows, rhs, cones = [], [], []

    def add(kind, block, r):
        rows.append(np.atleast_2d(block))
        rhs.append(np.atleast_1d(np.asarray(r, dtype=float)))
        cones.append(kind(np.atleast_2d(block).shape[0]))

    budget_row = np.zeros(nv)
    budget_row[:n] = 1.0
    add(Zero, budget_row, 1.0)

    if has_d:
        blk = np.zeros((n, nv))
        blk[:, :n] = np.eye(n)
        blk[:, d_col : d_col + n] = -np.eye(n)
        blk[:, d_col + n :] = np.eye(n)
        add(Zero, blk, problem.prev_weights)

    lower_blk = np.zeros((n, nv))
    lower_blk[:, :n] = -np.eye(n)
    add(NonNeg, lower_blk, -problem.lower)
    finite_u = np.isfinite(problem.upper)
    if np.any(finite_u):
        idx = np.flatnonzero(finite_u)
        blk = np.zeros((idx.size, nv))
        blk[np.arange(idx.size), idx] = 1.0
        add(NonNeg, blk, problem.upper[idx])
    if has_d:
        blk = np.zeros((2 * n, nv))
        blk[:, d_col:] = -np.eye(2 * n)
        add(NonNeg, blk, np.zeros(2 * n))

    if has_t:
        blk = np.zeros((n + 1, nv))
        blk[0, t_col] = -1.0
        blk[1:, :n] = -upper
        add(SecondOrder, blk, np.zeros(n + 1))

    for i in range(n):
        blk = np.zeros((n + 2, nv))
        ei = np.zeros(n)
        ei[i] = 1.0
        blk[0, :n] = -(ei + c[i])
        blk[1, :n] = -(ei - c[i])
        blk[2:, :n] = -2.0 * np.sqrt(problem.budgets[i]) * upper
        add(SecondOrder, blk, np.zeros(n + 2))

    return ConeProgram(c=obj, A=np.vstack(rows), b=np.concatenate(rhs), cones=tuple(cones))


def _infeasibility_report(problem: AllocationProblem) -> list[str]:
    # best-effort hints, not a certificate
    report = []
    if problem.lower.sum() > 1.0 + 1e-12:
        report.append(f"lower bounds sum to {problem.lower.sum():.6g} > 1")
    if problem.upper.sum() < 1.0 - 1e-12:
        report.append(f"upper bounds sum to {problem.upper.sum():.6g} < 1")
    for i in range(problem.size):
        if problem.budgets[i] > 0 and problem.upper[i] <= 0:
            report.append(f"{problem.asset_name(i)}: positive budget with zero upper bound")
    cap = np.minimum(problem.upper, 1.0)
    if np.all(np.isfinite(cap)):
        try:
            rc_cap = risk_contributions(problem.cov, np.maximum(cap, 1e-16))
            for i in range(problem.size):
                if problem.budgets[i] > rc_cap[i] + 0.5:
                    report.append(
                        f"{problem.asset_name(i)}: budget {problem.budgets[i]:.3g} looks "
                        f"unreachable under the upper bounds"
                    )
        except Exception:
            pass
    if not report:
        report.append("budgets and bounds jointly admit no portfolio")
    return report


def solve_allocation(problem: AllocationProblem,
                     opts: SolverOptions | None = None) -> AllocationResult:
    """Solve one instance; raises on infeasibility or solver failure.

    On success the weights sum to 1 within solver tolerance and every risk
    contribution is at least its budget minus roughly the same tolerance.
    """
    prog = build_program(problem)
    sol = solve(prog, opts)
    if sol.status is SolveStatus.Infeasible:
        raise InfeasibleAllocation(_infeasibility_report(problem))
    if sol.status is not SolveStatus.Optimal:
        detail = (f"pres {sol.primal_residual:.1e} dres {sol.dual_residual:.1e} "
                  f"gap {sol.gap:.1e} after {sol.iterations} iterations")
        raise SolverFailure(sol.status, detail)
    x = sol.primal[: problem.size]
    rc = risk_contributions(problem.cov, x)
    binding = np.abs(rc - problem.budgets) <= BINDING_TOL
    return AllocationResult(
        weights=x,
        objective=float(sol.objective),
        risk_contribs=rc,
        binding_budgets=binding,
        solver_stats=sol,
    )


def expected_stats(problem: AllocationProblem, weights) -> tuple[float, float]:
    """Ex-ante expected return ``r'w`` and standard deviation ``sqrt(w'Cw)``."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != problem.size:
        raise ValueError(f"weights have {w.size} entries, expected {problem.size}")
    exp_ret = float(problem.forecasts @ w)
    exp_sd = float(np.sqrt(max(w @ problem.cov @ w, 0.0)))
    return exp_ret, exp_sd


# JSON document schema (all arrays plain lists, cov row-major):
# {
#   "cov": [[...], ...],          required, n x n
#   "budgets": [...],             required, n
#   "forecasts": [...],           optional, default 0
#   "lambda": 1.0,                optional, default 1
#   "mu": 0.0,                    optional, default 0
#   "prev_weights": [...],        optional, default 0
#   "lower": [...],               optional, default 0
#   "upper": [...],               optional, default 1
#   "assets": ["SPY", ...]        optional labels
# }

def problem_to_json(problem: AllocationProblem) -> str:
    doc = {
        "cov": problem.cov.tolist(),
        "budgets": problem.budgets.tolist(),
        "forecasts": problem.forecasts.tolist(),
        "lambda": problem.lam,
        "mu": problem.mu,
        "prev_weights": problem.prev_weights.tolist(),
        "lower": problem.lower.tolist(),
        "upper": problem.upper.tolist(),
    }
    if problem.assets is not None:
        doc["assets"] = list(problem.assets)
    return json.dumps(doc, indent=2)


def _field_error(path, message):
    return ValueError(f"{path}: {message}")


def problem_from_json(source: str | dict) -> AllocationProblem:
    """Parse the documented JSON schema; errors name the offending field."""
    doc = json.loads(source) if isinstance(source, str) else source
    if not isinstance(doc, dict):
        raise _field_error("$", "expected a JSON object")
    for required in ("cov", "budgets"):
        if required not in doc:
            raise _field_error(required, "missing required field")

    cov = doc["cov"]
    if not isinstance(cov, list) or not cov or not all(isinstance(row, list) for row in cov):
        raise _field_error("cov", "expected a non-empty list of rows")
    n = len(cov)
    for i, row in enumerate(cov):
        if len(row) != n:
            raise _field_error(f"cov[{i}]", f"has {len(row)} entries, expected {n}")

    def vector(name, default):
        if name not in doc:
            return None if default is None else np.full(n, default)
        v = doc[name]
        if not isinstance(v, list):
            raise _field_error(name, "expected a list")
        if len(v) != n:
            raise _field_error(name, f"has {len(v)} entries, expected {n}")
        try:
            return np.asarray(v, dtype=float)
        except (TypeError, ValueError):
            raise _field_error(name, "entries must be numbers") from None

    def scalar(name, default):
        v = doc.get(name, default)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise _field_error(name, "expected a number")
        return float(v)

    assets = doc.get("assets")
    if assets is not None:
        if not isinstance(assets, list) or len(assets) != n or not all(isinstance(a, str) for a in assets):
            raise _field_error("assets", f"expected a list of {n} strings")
    try:
        problem = AllocationProblem(
            cov=np.asarray(cov, dtype=float),
            budgets=vector("budgets", None),
            forecasts=vector("forecasts", 0.0),
            lam=scalar("lambda", 1.0),
            mu=scalar("mu", 0.0),
            prev_weights=vector("prev_weights", 0.0),
            lower=vector("lower", 0.0),
            upper=vector("upper", 1.0),
            assets=tuple(assets) if assets else None,
        )
    except (TypeError, ValueError) as exc:
        raise _field_error("$", str(exc)) from None
    problem.validate()
    return problem
