"""Cone block types and the Jordan-algebra machinery behind the solver.

The solver works on a product cone made of three block kinds: Zero blocks
(equality rows), NonNeg blocks (componentwise inequalities) and SecondOrder
blocks (Lorentz cones, first coordinate >= norm of the rest). This module
holds the block dataclasses plus the internal primitives an interior-point
iteration needs on the NonNeg x SecondOrder part: identity element, Jordan
products and inverses, Nesterov-Todd scalings, and maximum step lengths to
the cone boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Zero", "NonNeg", "SecondOrder", "ConeStructure", "NTScaling"]


@dataclass(frozen=True)
class Zero:
    """Equality rows: the slack of this block is pinned to zero."""

    dim: int


@dataclass(frozen=True)
class NonNeg:
    """Componentwise nonnegative slack block."""

    dim: int


@dataclass(frozen=True)
class SecondOrder:
    """Lorentz cone block: s[0] >= ||s[1:]||. Requires dim >= 2."""

    dim: int


ConeBlock = Zero | NonNeg | SecondOrder


class ConeStructure:
    """Index bookkeeping for the NonNeg x SecondOrder part of a cone list.

    Positions are relative to the stacked *cone rows only* (Zero rows
    removed, original order preserved, so SecondOrder blocks stay
    contiguous).
    """

    def __init__(self, blocks):
        nn_idx = []
        soc_slices = []
        pos = 0
        for blk in blocks:
            if isinstance(blk, Zero):
                continue
            if isinstance(blk, NonNeg):
                nn_idx.extend(range(pos, pos + blk.dim))
                pos += blk.dim
            elif isinstance(blk, SecondOrder):
                soc_slices.append((pos, pos + blk.dim))
                pos += blk.dim
            else:
                raise TypeError(f"unknown cone block {blk!r}")
        self.dim = pos
        self.nn_idx = np.asarray(nn_idx, dtype=int)
        self.soc_slices = soc_slices
        # barrier degree: 1 per nonneg component, 1 per second-order block
        self.degree = len(nn_idx) + len(soc_slices)

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[self.nn_idx] = 1.0
        for lo, _hi in self.soc_slices:
            e[lo] = 1.0
        return e

    def margin(self, u: np.ndarray) -> float:
        """Smallest distance of ``u`` from every block boundary (can be < 0)."""
        m = np.inf
        if self.nn_idx.size:
            m = min(m, float(np.min(u[self.nn_idx])))
        for lo, hi in self.soc_slices:
            m = min(m, float(u[lo] - np.linalg.norm(u[lo + 1 : hi])))
        return m

    def prod(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Jordan product u o v, blockwise."""
        out = np.empty(self.dim)
        out[self.nn_idx] = u[self.nn_idx] * v[self.nn_idx]
        for lo, hi in self.soc_slices:
            u0, u1 = u[lo], u[lo + 1 : hi]
            v0, v1 = v[lo], v[lo + 1 : hi]
            out[lo] = u0 * v0 + u1 @ v1
            out[lo + 1 : hi] = u0 * v1 + v0 * u1
        return out

    def div(self, lmbda: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Solve lmbda o w = d for w, blockwise."""
        out = np.empty(self.dim)
        out[self.nn_idx] = d[self.nn_idx] / lmbda[self.nn_idx]
        for lo, hi in self.soc_slices:
            l0, l1 = lmbda[lo], lmbda[lo + 1 : hi]
            d0, d1 = d[lo], d[lo + 1 : hi]
            det = l0 * l0 - l1 @ l1
            w0 = (l0 * d0 - l1 @ d1) / det
            out[lo] = w0
            out[lo + 1 : hi] = (d1 - w0 * l1) / l0
        return out

    def max_step(self, u: np.ndarray, du: np.ndarray) -> float:
        """Largest alpha >= 0 with u + alpha*du in the cone (u interior)."""
        alpha = np.inf
        if self.nn_idx.size:
            un, dn = u[self.nn_idx], du[self.nn_idx]
            neg = dn < 0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-un[neg] / dn[neg])))
        for lo, hi in self.soc_slices:
            alpha = min(alpha, _soc_step(u[lo], u[lo + 1 : hi], du[lo], du[lo + 1 : hi]))
        return alpha


def _soc_step(u0, u1, d0, d1) -> float:
    # boundary crossing of (u0 + a d0)^2 - ||u1 + a d1||^2 for interior u
    a = d0 * d0 - d1 @ d1
    b = 2.0 * (u0 * d0 - u1 @ d1)
    c = u0 * u0 - u1 @ u1
    if c <= 0:  # numerically at/over the boundary already
        return 0.0
    if abs(a) < 1e-300:
        return -c / b if b < 0 else np.inf
    disc = b * b - 4.0 * a * c
    if a > 0:
        if disc < 0 or b >= 0:
            return np.inf
        q = -0.5 * (b - np.sqrt(disc))
        # both roots positive; smaller one is c/q
        return c / q
    # a < 0: exactly one positive root
    q = -0.5 * (b + np.copysign(np.sqrt(disc), b if b != 0 else 1.0))
    roots = [r for r in (q / a, c / q if q != 0 else np.inf) if r > 0]
    return min(roots) if roots else np.inf


class NTScaling:
    """Nesterov-Todd scaling point for a pair s, z interior to the cone.

    Defines the symmetric block-diagonal W with W z = W^{-1} s = lmbda.
    NonNeg blocks use w = sqrt(s/z); SecondOrder blocks keep the compact
    (eta, v) representation of W = eta * (2 v v' - J), with v'Jv = 1 and
    J = diag(1, -I). Per-block data is stored stacked so that products
    vectorize across blocks via segmented reductions.
    """

    def __init__(self, struct: ConeStructure, s: np.ndarray, z: np.ndarray):
        self.struct = struct
        self.w_nn = np.sqrt(s[struct.nn_idx] / z[struct.nn_idx])
        k = len(struct.soc_slices)
        self.eta = np.empty(k)
        self.v_all = np.zeros(struct.dim)  # concatenated v per block, zero elsewhere
        for i, (lo, hi) in enumerate(struct.soc_slices):
            s0, s1 = s[lo], s[lo + 1 : hi]
            z0, z1 = z[lo], z[lo + 1 : hi]
            ds = np.sqrt(s0 * s0 - s1 @ s1)
            dz = np.sqrt(z0 * z0 - z1 @ z1)
            sb = np.concatenate(([s0], s1)) / ds
            zb = np.concatenate(([z0], z1)) / dz
            gamma = np.sqrt(0.5 * (1.0 + sb @ zb))
            wb = sb.copy()
            wb[0] += zb[0]
            wb[1:] -= zb[1:]
            wb /= 2.0 * gamma
            # v is the Jordan square root of the unit-determinant point wb,
            # so that W = eta (2 v v' - J) satisfies W^2 z = s exactly
            v = wb.copy()
            v[0] = np.sqrt(0.5 * (wb[0] + 1.0))
            v[1:] = wb[1:] / (2.0 * v[0])
            self.eta[i] = np.sqrt(ds / dz)
            self.v_all[lo:hi] = v
        if k:
            self._starts = np.asarray([lo for lo, _ in struct.soc_slices])
            self._rep = np.zeros(struct.dim, dtype=int)
            self._mask = np.zeros(struct.dim, dtype=bool)
            self._tail = np.zeros(struct.dim, dtype=bool)
            for i, (lo, hi) in enumerate(struct.soc_slices):
                self._rep[lo:hi] = i
                self._mask[lo:hi] = True
                self._tail[lo + 1 : hi] = True
            self._jv_all = np.where(self._tail, -self.v_all, self.v_all)
        self.lmbda = self.apply(z)

    def _soc_part(self, u, vecs, scale):
        # scale_k * (2 vec_k (vec_k' u_k) - J u_k) stacked over blocks
        dots = np.add.reduceat(vecs * u, self._starts)
        ju = np.where(self._tail, -u, u)
        return scale[self._rep] * (2.0 * vecs * dots[self._rep] - ju)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """W u."""
        out = np.zeros(self.struct.dim)
        out[self.struct.nn_idx] = self.w_nn * u[self.struct.nn_idx]
        if self.eta.size:
            soc = self._soc_part(u, self.v_all, self.eta)
            out[self._mask] = soc[self._mask]
        return out

    def apply_inv(self, u: np.ndarray) -> np.ndarray:
        """W^{-1} u."""
        out = np.zeros(self.struct.dim)
        out[self.struct.nn_idx] = u[self.struct.nn_idx] / self.w_nn
        if self.eta.size:
            soc = self._soc_part(u, self._jv_all, 1.0 / self.eta)
            out[self._mask] = soc[self._mask]
        return out

    def gram(self, g: np.ndarray, soc_grams=None) -> np.ndarray:
        """Assemble H = G' W^{-2} G for a dense G with rows on cone rows.

        ``soc_grams`` optionally carries the precomputed stack of G_k' G_k
        per SecondOrder block (constant across iterations, shape
        ``(k, n, n)``); without it the per-block Grams are formed on the
        fly. W^{-2} per block is identity plus rank two, so the varying
        part reduces to one thin matrix product.
        """
        n = g.shape[1]
        h = np.zeros((n, n))
        if self.struct.nn_idx.size:
            gnn = g[self.struct.nn_idx]
            h += (gnn / (self.w_nn**2)[:, None]).T @ gnn
        k = self.eta.size
        if k:
            inv_eta2 = 1.0 / self.eta**2
            if soc_grams is not None:
                h += np.tensordot(inv_eta2, soc_grams, axes=1)
            else:
                for i, (lo, hi) in enumerate(self.struct.soc_slices):
                    gk = g[lo:hi]
                    h += inv_eta2[i] * (gk.T @ gk)
            # low-rank part: sum_k inv_eta2_k (4 (v'v) a a' - 2 a b' - 2 b a')
            # with a = G_k' (J v_k), b = G_k' v_k, done as one thin product
            amat = np.empty((n, k))
            bmat = np.empty((n, k))
            vtv = np.empty(k)
            for i, (lo, hi) in enumerate(self.struct.soc_slices):
                gk = g[lo:hi]
                amat[:, i] = gk.T @ self._jv_all[lo:hi]
                bmat[:, i] = gk.T @ self.v_all[lo:hi]
                vtv[i] = self.v_all[lo:hi] @ self.v_all[lo:hi]
            left = np.hstack([amat * (4.0 * vtv * inv_eta2), -2.0 * amat * inv_eta2])
            right = np.hstack([amat, bmat])
            cross = left @ right.T
            h += cross
            h += -2.0 * (bmat * inv_eta2) @ amat.T
        return 0.5 * (h + h.T)
