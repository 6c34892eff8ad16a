"""Second-order cone program solver.

Standard form: minimize ``c @ x`` subject to ``b - A @ x`` lying in a
product cone K. The rows of ``A`` are partitioned, in order, by the cone
block list: a ``Zero(d)`` block pins its slack rows to equality
(``A x = b``), a ``NonNeg(d)`` block gives componentwise inequalities
(``A x <= b``), and a ``SecondOrder(d)`` block constrains its slack vector
``s = b - A x`` to ``s[0] >= ||s[1:]||``. Free variables are supported
directly; cone dimensions therefore sum to the number of rows.

The algorithm is a primal-dual interior-point method on the homogeneous
self-dual embedding, with Nesterov-Todd scaling, Mehrotra
predictor-corrector steps and dense normal-equations linear solves. The
embedding yields clean infeasibility/unboundedness certificates instead of
numerical breakdown when the constraints conflict.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .cones import ConeBlock, ConeStructure, NonNeg, NTScaling, SecondOrder, Zero

__all__ = [
    "ConeProgram",
    "ConeSolution",
    "SolverOptions",
    "SolveStatus",
    "ProgramValidationError",
    "validate",
    "solve",
    "dump_program",
]

log = logging.getLogger("riskbudget.solver")

# cached per-block soc Grams are skipped above this many matrix entries
_GRAM_CACHE_LIMIT = 4 * 10**7


class SolveStatus(Enum):
    Optimal = "optimal"
    Infeasible = "infeasible"
    Unbounded = "unbounded"
    MaxIters = "max_iters"
    NumericalFailure = "numerical_failure"


class ProgramValidationError(ValueError):
    """Structural defects found in a ConeProgram; ``defects`` lists them."""

    def __init__(self, defects):
        self.defects = list(defects)
        super().__init__("; ".join(self.defects))


@dataclass(frozen=True)
class ConeProgram:
    """A cone program ``min c @ x  s.t.  b - A @ x in K``.

    ``A`` may be dense or scipy-sparse; it is stored dense. ``cones``
    lists the row blocks in order; their dims must sum to ``len(b)``.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: tuple[ConeBlock, ...]

    def __post_init__(self):
        a = self.A.toarray() if sp.issparse(self.A) else np.asarray(self.A, dtype=float)
        object.__setattr__(self, "A", np.ascontiguousarray(a))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float).ravel())
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).ravel())
        object.__setattr__(self, "cones", tuple(self.cones))


@dataclass
class SolverOptions:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    tol_cone: float = 1e-8
    max_iters: int = 200
    step_backoff: float = 0.99
    refine_steps: int = 2
    reg: float = 1e-11
    restarts: int = 2
    verbose: bool = False


@dataclass
class ConeSolution:
    """Solver result.

    ``primal`` is x (or the unboundedness ray when status is Unbounded);
    ``dual`` holds one multiplier per row of A (the infeasibility
    certificate when status is Infeasible); ``slack`` is ``b - A x`` on
    cone rows and 0 on Zero rows. Residuals are the scale-normalized
    primal/dual feasibility errors and the relative duality gap.
    """

    status: SolveStatus
    primal: np.ndarray
    dual: np.ndarray
    slack: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    gap: float


def validate(p: ConeProgram) -> list[str]:
    """Structural defects of ``p``; empty when well-formed."""
    defects = []
    if p.c.ndim != 1:
        defects.append("c must be a vector")
    if p.A.ndim != 2:
        defects.append("A must be a matrix")
        return defects
    m, n = p.A.shape
    if n != p.c.size:
        defects.append(f"dimension mismatch: A has {n} columns but c has {p.c.size} entries")
    if m != p.b.size:
        defects.append(f"dimension mismatch: A has {m} rows but b has {p.b.size} entries")
    total = 0
    for i, blk in enumerate(p.cones):
        if not isinstance(blk, (Zero, NonNeg, SecondOrder)):
            defects.append(f"cone block {i} has unknown type {type(blk).__name__}")
            continue
        if blk.dim < 1:
            defects.append(f"cone block {i} ({type(blk).__name__}) has dim {blk.dim} < 1")
        if isinstance(blk, SecondOrder) and blk.dim < 2:
            defects.append(f"cone block {i}: SecondOrder dim {blk.dim} < 2")
        total += blk.dim
    if total != p.b.size:
        defects.append(f"cone dims sum to {total} but A has {p.b.size} rows")
    for name, arr in (("c", p.c), ("A", p.A), ("b", p.b)):
        if arr.size and not np.all(np.isfinite(arr)):
            defects.append(f"{name} contains non-finite entries")
    return defects


def _row_partition(p: ConeProgram):
    zero_rows, cone_rows, cone_blocks = [], [], []
    pos = 0
    for blk in p.cones:
        idx = list(range(pos, pos + blk.dim))
        if isinstance(blk, Zero):
            zero_rows.extend(idx)
        else:
            cone_rows.extend(idx)
            cone_blocks.append(blk)
        pos += blk.dim
    return np.asarray(zero_rows, dtype=int), np.asarray(cone_rows, dtype=int), cone_blocks


class _KKT:
    """Factored reduced KKT system [[H, Aeq'], [Aeq, 0]] with H = G'W^-2 G.

    Solves the 3-block system (dx, dy, dz) of the scaled Newton equations
    by elimination of dz, with iterative refinement carried out in the full
    3-block space (W applied functionally) to recover accuracy lost when
    forming H at extreme scalings.
    """

    def __init__(self, aeq, g, scaling, soc_grams, reg, refine_steps):
        n = g.shape[1] if g.size else aeq.shape[1]
        p = aeq.shape[0]
        h = scaling.gram(g, soc_grams) if g.shape[0] else np.zeros((n, n))
        mreg = np.zeros((n + p, n + p))
        mreg[:n, :n] = h
        if p:
            mreg[:n, n:] = aeq.T
            mreg[n:, :n] = aeq
        scale = max(1.0, float(np.trace(h)) / max(n, 1))
        mreg[:n, :n] += reg * scale * np.eye(n)
        if p:
            mreg[n:, n:] -= reg * scale * np.eye(p)
        self.n, self.p = n, p
        self.aeq, self.g, self.scaling = aeq, g, scaling
        self.lu = sla.lu_factor(mreg)
        self.refine_steps = refine_steps

    def _reduced(self, rho_x, rho_y, rho_3):
        w = self.scaling
        gx = rho_x + self.g.T @ w.apply_inv(w.apply_inv(rho_3)) if self.g.shape[0] else rho_x
        u = sla.lu_solve(self.lu, np.concatenate([gx, rho_y]))
        dx, dy = u[: self.n], u[self.n :]
        dz = w.apply_inv(w.apply_inv(self.g @ dx - rho_3)) if self.g.shape[0] else np.zeros(0)
        return dx, dy, dz

    def solve3(self, rho_x, rho_y, rho_3):
        dx, dy, dz = self._reduced(rho_x, rho_y, rho_3)
        w = self.scaling
        base = max(float(np.linalg.norm(rho_x)), float(np.linalg.norm(rho_y)),
                   float(np.linalg.norm(rho_3)) if rho_3.size else 0.0, 1e-300)
        for _ in range(self.refine_steps):
            res_x = rho_x - (self.aeq.T @ dy + self.g.T @ dz)
            res_y = rho_y - self.aeq @ dx
            res_3 = rho_3 - (self.g @ dx - w.apply(w.apply(dz))) if self.g.shape[0] else rho_3[:0]
            rnorm = max(float(np.linalg.norm(res_x)), float(np.linalg.norm(res_y)),
                        float(np.linalg.norm(res_3)) if res_3.size else 0.0)
            if rnorm <= 1e-14 * base:
                break
            ex, ey, ez = self._reduced(res_x, res_y, res_3)
            if not (np.all(np.isfinite(ex)) and np.all(np.isfinite(ey)) and np.all(np.isfinite(ez))):
                break
            dx, dy, dz = dx + ex, dy + ey, dz + ez
        return dx, dy, dz


def solve(p: ConeProgram, opts: SolverOptions | None = None,
          warm_start: ConeSolution | None = None) -> ConeSolution:
    """Solve a cone program; never raises for solvable-but-degenerate data.

    Malformed programs raise :class:`ProgramValidationError` before any
    iteration. All other outcomes are reported through the status field.
    When an attempt stalls just above the tolerances, the iteration is
    restarted from the re-centered best point (up to ``opts.restarts``
    times), which typically recovers the last digits.
    """
    opts = opts or SolverOptions()
    defects = validate(p)
    if defects:
        raise ProgramValidationError(defects)

    sol = _solve_once(p, opts, warm_start)
    total_iters = sol.iterations
    for _ in range(opts.restarts):
        if sol.status not in (SolveStatus.NumericalFailure, SolveStatus.MaxIters):
            break
        metric = max(sol.primal_residual / opts.tol_feas, sol.dual_residual / opts.tol_feas,
                     sol.gap / opts.tol_gap)
        if not np.isfinite(metric) or metric > 1e4:
            break
        retry = _solve_once(p, opts, warm_start=sol)
        total_iters += retry.iterations
        retry_metric = max(retry.primal_residual / opts.tol_feas,
                           retry.dual_residual / opts.tol_feas, retry.gap / opts.tol_gap)
        if retry.status is SolveStatus.Optimal or retry_metric < metric:
            sol = retry
        else:
            break
    sol.iterations = total_iters
    return sol


def _solve_once(p: ConeProgram, opts: SolverOptions,
                warm_start: ConeSolution | None = None) -> ConeSolution:

    zero_rows, cone_rows, cone_blocks = _row_partition(p)
    n = p.c.size
    aeq, beq = p.A[zero_rows], p.b[zero_rows]
    g, h = p.A[cone_rows], p.b[cone_rows]
    struct = ConeStructure(cone_blocks)
    m = struct.dim
    c = p.c

    # row equilibration: per-row for equalities/inequalities, one uniform
    # factor per second-order block (cones are invariant under positive
    # scaling); termination is still measured against the original data
    def row_scale(norms):
        # all-zero rows (constant slack entries) do not influence scaling
        return np.where(norms > 1e-300, norms, 1.0)

    d_eq = row_scale(np.linalg.norm(aeq, axis=1)) if aeq.size else np.ones(aeq.shape[0])
    d_cone = np.ones(m)
    if m:
        row_norms = np.linalg.norm(g, axis=1)
        if struct.nn_idx.size:
            d_cone[struct.nn_idx] = row_scale(row_norms[struct.nn_idx])
        for lo, hi in struct.soc_slices:
            live = row_norms[lo:hi]
            live = live[live > 1e-300]
            d_cone[lo:hi] = np.exp(np.mean(np.log(live))) if live.size else 1.0
    aeq = aeq / d_eq[:, None] if aeq.size else aeq
    beq = beq / d_eq
    g = g / d_cone[:, None] if g.size else g
    h = h / d_cone
    norm_beq_orig = 1.0 + np.linalg.norm(beq * d_eq)
    norm_h_orig = 1.0 + np.linalg.norm(h * d_cone)

    soc_grams = None
    if struct.soc_slices and len(struct.soc_slices) * n * n <= _GRAM_CACHE_LIMIT:
        soc_grams = np.stack([g[lo:hi].T @ g[lo:hi] for lo, hi in struct.soc_slices])

    e = struct.identity()
    deg = max(struct.degree, 1)

    x = np.zeros(n)
    y = np.zeros(aeq.shape[0])
    z = e.copy()
    s = e.copy()
    tau, kappa = 1.0, 1.0
    if warm_start is not None and warm_start.primal.size == n and warm_start.dual.size == p.b.size:
        x = warm_start.primal.copy()
        if np.all(np.isfinite(x)):
            y = warm_start.dual[zero_rows] * d_eq
            z_w = warm_start.dual[cone_rows] * d_cone
            s_w = warm_start.slack[cone_rows] / d_cone
            # interior pad sized so the re-injected duality gap stays a
            # fraction of the gap tolerance at this problem's scale
            mass = 1.0 + float(np.abs(s_w).sum() + np.abs(z_w).sum())
            pad = max(1e-13, 0.03 * opts.tol_gap * max(1.0, abs(c @ x)) / mass)
            z = _lift(struct, z_w, pad)
            s = _lift(struct, s_w, pad)
            tau = 1.0
            kappa = max((s @ z) / deg, 1e-14)
        else:
            x = np.zeros(n)

    norm_c = 1.0 + np.linalg.norm(c)

    def report(status, iters, xr, yr, zr, sr, pres, dres, relgap, obj):
        dual = np.zeros(p.b.size)
        slack = np.zeros(p.b.size)
        dual[zero_rows] = yr / d_eq
        dual[cone_rows] = zr / d_cone
        slack[cone_rows] = sr * d_cone
        return ConeSolution(status, xr, dual, slack, obj, iters, pres, dres, relgap)

    best = None
    best_metric = np.inf
    best_primal = None  # (pres, it, xt, st)
    best_dual = None  # (dres, it, yt, zt)
    exhausted = False
    converged_at = None
    centering_steps = 0
    for it in range(opts.max_iters + 1):
        # residuals of the embedding
        r_d = aeq.T @ y + g.T @ z + c * tau
        r_p = aeq @ x - beq * tau
        r_c = g @ x + s - h * tau
        r_g = c @ x + beq @ y + h @ z + kappa

        # de-homogenized convergence metrics, measured on the original
        # (unequilibrated) data; dual residual and gap are scale-invariant
        xt, yt, zt, st = x / tau, y / tau, z / tau, s / tau
        pres = max(
            np.linalg.norm((aeq @ xt - beq) * d_eq) / norm_beq_orig,
            np.linalg.norm((g @ xt + st - h) * d_cone) / norm_h_orig if m else 0.0,
        )
        dres = np.linalg.norm(aeq.T @ yt + g.T @ zt + c) / norm_c
        pobj = c @ xt
        dobj = -(beq @ yt + h @ zt)
        gap_abs = st @ zt
        relgap = gap_abs / max(1.0, abs(pobj), abs(dobj))
        metric = max(pres / opts.tol_feas, dres / opts.tol_feas, relgap / opts.tol_gap)
        improved = metric < best_metric
        if improved:
            best_metric = metric
            best = (it, xt, yt, zt, st, pres, dres, relgap, pobj)
        if best_primal is None or pres < best_primal[0]:
            best_primal = (pres, it, xt, st)
        if best_dual is None or dres < best_dual[0]:
            best_dual = (dres, it, yt, zt)
        if opts.verbose:
            log.info("iter %3d pres %.2e dres %.2e relgap %.2e tau %.2e kappa %.2e",
                     it, pres, dres, relgap, tau, kappa)

        if metric <= 1.0 and converged_at is None:
            converged_at = it
        if converged_at is not None:
            # tolerance already met: polish while the error keeps dropping
            if not improved or it - converged_at >= 8:
                break
        else:
            # certificate checks
            ip = beq @ y + h @ z
            if ip < -1e-14:
                nu = -1.0 / ip
                if np.linalg.norm(aeq.T @ (nu * y) + g.T @ (nu * z)) <= opts.tol_feas * norm_c:
                    return report(SolveStatus.Infeasible, it, np.full(n, np.nan),
                                  nu * y, nu * z, np.full(m, np.nan), pres, dres, relgap, np.nan)
            ic = c @ x
            if ic < -1e-14:
                nu = -1.0 / ic
                if (np.linalg.norm((aeq @ (nu * x)) * d_eq) <= opts.tol_feas * norm_beq_orig
                        and np.linalg.norm((g @ (nu * x) + nu * s) * d_cone) <= opts.tol_feas * norm_h_orig):
                    return report(SolveStatus.Unbounded, it, nu * x, np.full(aeq.shape[0], np.nan),
                                  np.full(m, np.nan), nu * s, pres, dres, relgap, np.nan)

        if it == opts.max_iters:
            exhausted = True
            break
        # the iterates have started degrading: stop and report the best seen
        if metric > 1e2 * best_metric:
            break

        mu = (s @ z + tau * kappa) / (deg + 1)
        # refinement earns its cost only once the barrier is small and the
        # scaled system turns ill-conditioned (mu starts near 1 cold)
        refine = opts.refine_steps if mu <= 1e-2 else 0
        try:
            scaling = NTScaling(struct, s, z)
            kkt = _KKT(aeq, g, scaling, soc_grams, opts.reg, refine)
        except (sla.LinAlgError, FloatingPointError, ValueError):
            break
        lmbda = scaling.lmbda

        u1 = kkt.solve3(-c, beq, h)
        q1 = c @ u1[0] + beq @ u1[1] + h @ u1[2]
        denom = q1 - kappa / tau
        if not np.isfinite(denom) or abs(denom) < 1e-300:
            break

        def direction(d_s, d_kappa):
            dtil = struct.div(lmbda, d_s)
            rho3 = -r_c - scaling.apply(dtil)
            u0 = kkt.solve3(-r_d, -r_p, rho3)
            q0 = c @ u0[0] + beq @ u0[1] + h @ u0[2]
            dtau = -(r_g + q0 + d_kappa / tau) / denom
            dx = u0[0] + dtau * u1[0]
            dy = u0[1] + dtau * u1[1]
            dz = u0[2] + dtau * u1[2]
            # recover ds and dkappa from the linear embedding rows rather
            # than the scaled complementarity: the scaling is singular in
            # the limit and would leak its conditioning into feasibility
            ds = -r_c - g @ dx + h * dtau
            dkappa = -r_g - (c @ dx + beq @ dy + h @ dz)
            return dx, dy, dz, ds, dtau, dkappa

        def max_step(dz, ds, dtau, dkappa):
            alpha = min(struct.max_step(s, ds), struct.max_step(z, dz))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        if relgap <= 0.9 * opts.tol_gap and (pres > opts.tol_feas or dres > opts.tol_feas):
            # the gap has converged but feasibility lags: pure centering
            # steps polish the residuals without shrinking mu further into
            # the region where the scaling turns numerically singular
            centering_steps += 1
            if centering_steps > 25:
                break
            sigma = 1.0
            d_s = -struct.prod(lmbda, lmbda) + sigma * mu * e
            d_kappa = -tau * kappa + sigma * mu
            dx, dy, dz, ds, dtau, dkappa = direction(d_s, d_kappa)
        else:
            # predictor
            aff = direction(-struct.prod(lmbda, lmbda), -tau * kappa)
            alpha_aff = min(1.0, max_step(aff[2], aff[3], aff[4], aff[5]))
            sigma = min(1.0, max(0.0, (1.0 - alpha_aff))) ** 3

            # corrector
            corr = struct.prod(scaling.apply_inv(aff[3]), scaling.apply(aff[2]))
            d_s = -struct.prod(lmbda, lmbda) + sigma * mu * e - corr
            d_kappa = -tau * kappa + sigma * mu - aff[4] * aff[5]
            dx, dy, dz, ds, dtau, dkappa = direction(d_s, d_kappa)

        if not all(np.all(np.isfinite(d)) for d in (dx, dy, dz, ds)) or not np.isfinite(dtau + dkappa):
            break
        alpha = opts.step_backoff * max_step(dz, ds, dtau, dkappa)
        alpha = min(1.0, alpha)
        if opts.verbose:
            log.info("        alpha %.3e sigma %.3e mu %.3e", alpha, sigma, mu)
        if not np.isfinite(alpha) or alpha <= 1e-13:
            break

        x += alpha * dx
        y += alpha * dy
        z += alpha * dz
        s += alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa
        if tau <= 0 or kappa <= 0 or struct.margin(s) <= 0 or struct.margin(z) <= 0:
            break

    it, xt, yt, zt, st, pres, dres, relgap, pobj = best
    if best_metric <= 1.0:
        # iterations counts the steps to first reach the tolerances; the
        # returned point may come from a later polishing iteration
        return report(SolveStatus.Optimal, converged_at, xt, yt, zt, st, pres, dres, relgap, pobj)

    # primal and dual accuracy often peak on different iterations; the
    # cross-assembled pair is a valid solution whenever it passes the same
    # three checks, which are recomputed here from scratch
    if best_primal is not None and best_dual is not None:
        presx, itp, xt2, st2 = best_primal
        dresx, itd, yt2, zt2 = best_dual
        pobj2 = c @ xt2
        dobj2 = -(beq @ yt2 + h @ zt2)
        gap2 = st2 @ zt2
        relgap2 = gap2 / max(1.0, abs(pobj2), abs(dobj2))
        if presx <= opts.tol_feas and dresx <= opts.tol_feas and relgap2 <= opts.tol_gap:
            return report(SolveStatus.Optimal, max(itp, itd), xt2, yt2, zt2, st2,
                          presx, dresx, relgap2, pobj2)

    if exhausted:
        status = SolveStatus.MaxIters
    else:
        status = SolveStatus.NumericalFailure
    return report(status, it, xt, yt, zt, st, pres, dres, relgap, pobj)


def _lift(struct: ConeStructure, u: np.ndarray, pad: float) -> np.ndarray:
    """Move a point into the cone interior by the absolute margin ``pad``.

    The pad trades interiority (room for the first steps) against the
    duality gap it re-injects, roughly ``pad`` times the partner
    magnitudes; callers size it accordingly.
    """
    out = np.asarray(u, dtype=float).copy()
    if struct.nn_idx.size:
        out[struct.nn_idx] = np.maximum(out[struct.nn_idx], pad)
    for lo, hi in struct.soc_slices:
        out[lo] = max(out[lo], np.linalg.norm(out[lo + 1 : hi]) + pad)
    return out


def dump_program(p: ConeProgram, path) -> None:
    """Write a plain-text standard-form dump (triplets + cone list).

    Format (0-based indices, full-precision floats, one item per line)::

        conedump v1
        vars <n>
        rows <m>
        c
        <j> <value>           # nonzeros of the objective
        A
        <i> <j> <value>       # nonzeros of the constraint matrix, row-major
        b
        <i> <value>           # nonzeros of the right-hand side
        cones
        zero|nonneg|soc <dim> # blocks in row order
        end
    """
    m, n = p.A.shape
    lines = ["conedump v1", f"vars {n}", f"rows {m}", "c"]
    for j in np.flatnonzero(p.c):
        lines.append(f"{j} {float(p.c[j])!r}")
    lines.append("A")
    for i in range(m):
        for j in np.flatnonzero(p.A[i]):
            lines.append(f"{i} {j} {float(p.A[i, j])!r}")
    lines.append("b")
    for i in np.flatnonzero(p.b):
        lines.append(f"{i} {float(p.b[i])!r}")
    lines.append("cones")
    names = {Zero: "zero", NonNeg: "nonneg", SecondOrder: "soc"}
    for blk in p.cones:
        lines.append(f"{names[type(blk)]} {blk.dim}")
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
