"""Classical risk budgeting: pick the share of variance each asset carries.

Walks through the log-barrier solver on a three-asset covariance: equal
budgets (risk parity), custom budgets, and the closed forms that make
good sanity checks.
"""

import numpy as np

from riskbudget import risk_contributions, solve_vanilla

vols = np.array([0.22, 0.06, 0.15])  # annualized: equity, bond, gold
corr = np.array([
    [1.0, -0.2, 0.3],
    [-0.2, 1.0, 0.1],
    [0.3, 0.1, 1.0],
])
cov = corr * np.outer(vols, vols)
names = ["EQTY", "BOND", "GOLD"]

print("=== equal budgets (risk parity) ===")
x = solve_vanilla(cov, np.full(3, 1 / 3))
rc = risk_contributions(cov, x)
for n, w, c in zip(names, x, rc):
    print(f"  {n}: weight {w:.4f}  risk share {c:.4f}")
print("  note the low-vol bond soaks up most of the capital\n")

print("=== custom budgets: 60/20/20 of the risk ===")
x = solve_vanilla(cov, np.array([0.6, 0.2, 0.2]))
rc = risk_contributions(cov, x)
for n, w, c in zip(names, x, rc):
    print(f"  {n}: weight {w:.4f}  risk share {c:.4f}")
print()

print("=== sanity check: diagonal covariance has a closed form ===")
sig = np.array([0.3, 0.1, 0.2])
b = np.array([0.5, 0.3, 0.2])
x = solve_vanilla(np.diag(sig**2), b)
closed = np.sqrt(b) / sig
closed /= closed.sum()
print("  solver:", np.round(x, 10))
print("  sqrt(b)/sigma normalized:", np.round(closed, 10))

print()
print("=== sanity check: two assets with equal budgets ===")
s1, s2, rho = 0.2, 0.1, 0.65
cov2 = np.array([[s1**2, rho * s1 * s2], [rho * s1 * s2, s2**2]])
x = solve_vanilla(cov2, np.array([0.5, 0.5]))
print(f"  solver: {np.round(x, 10)}  closed form: {np.round([s2 / (s1 + s2), s1 / (s1 + s2)], 10)}")
print("  (inverse-volatility weights, whatever the correlation)")
