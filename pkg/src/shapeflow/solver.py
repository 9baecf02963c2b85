"""Constrained minimisation of the weighted second-difference energy.

For one scalar field ``f`` the energy is ``sum_s w_s (D_s f)**2`` over every
horizontal and vertical three-point stencil ``s``. Known pixels are held
fixed and the remaining quadratic problem is solved with Jacobi-
preconditioned conjugate gradients, warm-started from a coarse-to-fine
pyramid. All inner products use ``np.add.reduce`` rather than BLAS so the
result does not depend on the number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

Monitor = Callable[[int, float], None]


@dataclass
class LevelResult:
    values: np.ndarray
    iterations: int
    final_update: float
    converged: bool


def stencil_operator(shape, guidance: Optional[np.ndarray] = None, boundary_weight: float = 1.0):
    """Second-difference operator ``D`` (one row per stencil) and row weights.

    A stencil whose three pixels do not all share the same ``guidance``
    value straddles the shape boundary and gets ``boundary_weight``.
    """
    h, w = shape
    idx = np.arange(h * w).reshape(h, w)
    blocks, weights = [], []
    for a, c, b in (
        (idx[:, :-2], idx[:, 1:-1], idx[:, 2:]),
        (idx[:-2, :], idx[1:-1, :], idx[2:, :]),
    ):
        a, c, b = a.ravel(), c.ravel(), b.ravel()
        m = c.size
        if m == 0:
            continue
        rows = np.repeat(np.arange(m), 3)
        cols = np.stack([a, c, b], axis=1).ravel()
        vals = np.tile([1.0, -2.0, 1.0], m)
        blocks.append(sp.csr_matrix((vals, (rows, cols)), shape=(m, h * w)))
        wt = np.ones(m)
        if guidance is not None:
            g = guidance.ravel()
            straddle = (g[a] != g[c]) | (g[c] != g[b])
            wt[straddle] = boundary_weight
        weights.append(wt)
    if not blocks:
        return sp.csr_matrix((0, h * w)), np.zeros(0)
    return sp.vstack(blocks, format="csr"), np.concatenate(weights)


def weighted_energy(D, weights, values: np.ndarray) -> float:
    r = D @ values.ravel()
    return float(np.add.reduce(weights * r * r))


def _dot(a, b) -> float:
    return float(np.add.reduce(a * b))


def _cg(A, b, x, tol, max_iterations, monitor=None, energy=None, monitor_every=100):
    d = A.diagonal()
    r = b - A @ x
    z = r / d
    p = z.copy()
    rz = _dot(r, z)
    it = 0
    update = 0.0
    converged = False
    while True:
        if rz <= 0.0:
            converged = True
            break
        if it >= max_iterations:
            break
        Ap = A @ p
        pAp = _dot(p, Ap)
        if pAp <= 0.0:
            converged = True
            break
        alpha = rz / pAp
        step = alpha * p
        x = x + step
        r = r - alpha * Ap
        it += 1
        update = float(np.abs(step).max())
        if monitor is not None and it % monitor_every == 0:
            monitor(it, energy(x))
        if update < tol:
            converged = True
            break
        z = r / d
        rz_next = _dot(r, z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    return x, it, update, converged


def solve_level(values, known, guidance, boundary_weight, tol, max_iterations, monitor=None) -> LevelResult:
    """Minimise the energy over the unknown pixels of one grid.

    ``values`` holds the known data and the initial guess for the unknowns.
    Unknown pixels that no weighted stencil touches keep their guess.
    """
    values = np.array(values, np.float64)
    flat = values.ravel()
    D, wt = stencil_operator(values.shape, guidance, boundary_weight)
    A = (D.T @ sp.diags(wt) @ D).tocsr()
    unknown = np.flatnonzero(~known.ravel())
    if unknown.size == 0:
        return LevelResult(values, 0, 0.0, True)
    diag = A.diagonal()[unknown]
    unknown = unknown[diag > 0]
    if unknown.size == 0:
        return LevelResult(values, 0, 0.0, True)
    fixed = np.ones(flat.size, bool)
    fixed[unknown] = False
    rows = A[unknown]
    A_uu = rows[:, unknown].tocsr()
    b = -(rows[:, fixed] @ flat[fixed])

    energy = None
    if monitor is not None:
        def energy(xu):
            full = flat.copy()
            full[unknown] = xu
            return weighted_energy(D, wt, full)

    x, it, update, ok = _cg(A_uu, b, flat[unknown].copy(), tol, max_iterations, monitor, energy)
    flat = flat.copy()
    flat[unknown] = x
    return LevelResult(flat.reshape(values.shape), it, update, ok)


def _affine_guess(values, known):
    """Least-squares plane through the known samples (mean if degenerate)."""
    ys, xs = np.nonzero(known)
    f = values[known].astype(np.float64)
    if f.size == 0:
        return np.zeros(values.shape)
    basis = np.stack([np.ones_like(xs, dtype=np.float64), xs.astype(np.float64), ys.astype(np.float64)])
    gram = np.array([[_dot(p, q) for q in basis] for p in basis])
    rhs = np.array([_dot(p, f) for p in basis])
    h, w = values.shape
    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    if f.size >= 3 and np.linalg.cond(gram) < 1e12:
        c = np.linalg.solve(gram, rhs)
        return c[0] + c[1] * gx + c[2] * gy
    return np.full(values.shape, _dot(f, np.ones_like(f)) / f.size)


def _restrict(values, known, guidance):
    h, w = known.shape
    hc, wc = (h + 1) // 2, (w + 1) // 2
    pad = ((0, 2 * hc - h), (0, 2 * wc - w))

    def blocks(a):
        return np.pad(a, pad).reshape(hc, 2, wc, 2)

    exists = blocks(np.ones((h, w))).sum(axis=(1, 3))
    nknown = blocks(known.astype(np.float64)).sum(axis=(1, 3))
    ksum = blocks(np.where(known, values, 0.0)).sum(axis=(1, 3))
    known_c = nknown == exists
    values_c = np.where(known_c, ksum / np.maximum(nknown, 1), 0.0)
    guidance_c = None
    if guidance is not None:
        guidance_c = blocks(guidance.astype(np.float64)).sum(axis=(1, 3)) / exists >= 0.5
    return values_c, known_c, guidance_c


def _prolong(coarse, shape):
    """Bilinear upsampling by two with linear extrapolation at the borders."""
    h, w = shape
    hc, wc = coarse.shape

    def axis(n, nc):
        t = (np.arange(n) - 0.5) / 2.0
        if nc == 1:
            return np.zeros(n, np.intp), np.zeros(n), np.zeros(n, np.intp)
        i0 = np.clip(np.floor(t).astype(np.intp), 0, nc - 2)
        return i0, t - i0, i0 + 1

    y0, fy, y1 = axis(h, hc)
    x0, fx, x1 = axis(w, wc)
    fy = fy[:, None]
    fx = fx[None, :]
    top = (1 - fx) * coarse[y0][:, x0] + fx * coarse[y0][:, x1]
    bottom = (1 - fx) * coarse[y1][:, x0] + fx * coarse[y1][:, x1]
    return (1 - fy) * top + fy * bottom


def solve_pyramid(values, known, guidance, boundary_weight, tol, max_iterations, levels, monitor=None):
    """Coarse-to-fine solve; returns the finest LevelResult and coarse iteration total."""
    values = np.asarray(values, np.float64)
    coarse_iterations = 0
    h, w = known.shape
    if levels > 1 and min(h, w) >= 8:
        vc, kc, gc = _restrict(values, known, guidance)
        if kc.any() and not kc.all():
            coarse, coarse_iterations = solve_pyramid(vc, kc, gc, boundary_weight, tol, max_iterations, levels - 1)
            guess = _prolong(coarse.values, (h, w))
            coarse_iterations += coarse.iterations
        else:
            guess = _affine_guess(values, known)
    else:
        guess = _affine_guess(values, known)
    start = np.where(known, values, guess)
    return solve_level(start, known, guidance, boundary_weight, tol, max_iterations, monitor), coarse_iterations
