"""Batched solvers: monotone root bracketing and damped Newton minimisation.

Both work on ``R`` independent problems at once so that the Monte Carlo
harness can fit thousands of replicate datasets in a handful of vectorised
passes.  Objectives receive the current points together with the indices
of the replicates still being iterated, and return one value per point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

GRAD_STEP = 1e-5
HESS_STEP = 1e-4
MAX_STEP = 2.0  # largest Newton step, in log-parameter units


@dataclass
class BatchResult:
    x: np.ndarray
    fun: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    grad_norm: np.ndarray


def bisect_decreasing(
    fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    size: int,
    max_iter: int = 200,
    xtol: float = 1e-15,
):
    """Root of ``R`` decreasing functions on the shared bracket ``[lo, hi]``.

    Returns ``(x, has_root, iterations)``.  ``has_root`` is False where
    the function does not change sign on the bracket; ``x`` is NaN there.
    """
    idx = np.arange(size)
    f_lo = fun(np.full(size, lo), idx)
    f_hi = fun(np.full(size, hi), idx)
    has_root = (f_lo > 0) & (f_hi < 0)
    a = np.full(size, lo, dtype=float)
    b = np.full(size, hi, dtype=float)
    iters = np.zeros(size, dtype=int)
    active = has_root.copy()
    for _ in range(max_iter):
        if not active.any():
            break
        ia = np.flatnonzero(active)
        mid = 0.5 * (a[ia] + b[ia])
        fm = fun(mid, ia)
        pos = fm > 0
        a[ia] = np.where(pos, mid, a[ia])
        b[ia] = np.where(pos, b[ia], mid)
        iters[ia] += 1
        done = (fm == 0) | (b[ia] - a[ia] <= xtol * np.maximum(1.0, np.abs(mid)))
        a[ia[fm == 0]] = mid[fm == 0]
        b[ia[fm == 0]] = mid[fm == 0]
        active[ia[done]] = False
    x = np.where(has_root, 0.5 * (a + b), np.nan)
    return x, has_root, iters


def fd_gradient_hessian(fun, x, idx, f0=None):
    """Central-difference gradient and Hessian for a batch of points."""
    R, p = x.shape
    if f0 is None:
        f0 = fun(x, idx)
    g = np.empty((R, p))
    H = np.empty((R, p, p))
    eye = np.eye(p)
    for i in range(p):
        hg = GRAD_STEP * eye[i]
        g[:, i] = (fun(x + hg, idx) - fun(x - hg, idx)) / (2 * GRAD_STEP)
        hh = HESS_STEP * eye[i]
        fp = fun(x + hh, idx)
        fm = fun(x - hh, idx)
        H[:, i, i] = (fp - 2 * f0 + fm) / HESS_STEP**2
        for j in range(i):
            hj = HESS_STEP * eye[j]
            val = (
                fun(x + hh + hj, idx)
                - fun(x + hh - hj, idx)
                - fun(x - hh + hj, idx)
                + fun(x - hh - hj, idx)
            ) / (4 * HESS_STEP**2)
            H[:, i, j] = H[:, j, i] = val
    return f0, g, H


def _damped_steps(g, H, mu):
    """Solve ``(H + mu I) s = -g`` after lifting ``mu`` above ``-min eig(H)``."""
    p = g.shape[1]
    eig = np.linalg.eigvalsh(H)
    lift = np.maximum(mu, -eig[:, 0] + 1e-8 * (1 + np.abs(eig[:, -1])))
    A = H + lift[:, None, None] * np.eye(p)
    s = -np.linalg.solve(A, g[..., None])[..., 0]
    norm = np.linalg.norm(s, axis=1)
    scale = np.where(norm > MAX_STEP, MAX_STEP / np.maximum(norm, 1e-300), 1.0)
    return s * scale[:, None], lift


def minimize_newton(
    fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x0: np.ndarray,
    gtol: float = 1e-6,
    max_iter: int = 200,
    bound: float | np.ndarray = 60.0,
) -> BatchResult:
    """Levenberg-damped Newton minimisation of ``R`` smooth objectives.

    ``x0`` has shape ``(R, p)``.  Derivatives are central finite differences.
    A point counts as converged once its gradient norm is below ``gtol`` and
    the Hessian there is positive definite.  Iterates that leave the box
    ``|x_i| <= bound`` (scalar or per-coordinate) are stopped and reported as
    not converged.
    """
    x = np.array(x0, dtype=float, copy=True)
    bound = np.broadcast_to(np.asarray(bound, dtype=float), x.shape[1:])
    R, p = x.shape
    idx_all = np.arange(R)
    with np.errstate(all="ignore"):
        f = fun(x, idx_all)
    mu = np.zeros(R)
    iters = np.zeros(R, dtype=int)
    gnorm = np.full(R, np.inf)
    converged = np.zeros(R, dtype=bool)
    active = np.isfinite(f)
    for _ in range(max_iter):
        if not active.any():
            break
        ia = np.flatnonzero(active)
        xa = x[ia]
        with np.errstate(all="ignore"):
            _, g, H = fd_gradient_hessian(fun, xa, ia, f[ia])
        gn = np.linalg.norm(g, axis=1)
        gnorm[ia] = gn
        ok_h = np.all(np.isfinite(H), axis=(1, 2)) & np.all(np.isfinite(g), axis=1)
        pd = np.zeros(len(ia), dtype=bool)
        if ok_h.any():
            pd[ok_h] = np.linalg.eigvalsh(H[ok_h])[:, 0] > 0
        done = ok_h & pd & (gn < gtol)
        converged[ia[done]] = True
        stuck = ~ok_h
        active[ia[done | stuck]] = False
        keep = ~(done | stuck)
        if not keep.any():
            break
        ia, xa, g, H = ia[keep], xa[keep], g[keep], H[keep]
        iters[ia] += 1
        # Up to a few damping increases per outer iteration.
        pending = np.ones(len(ia), dtype=bool)
        for _ in range(8):
            if not pending.any():
                break
            sel = np.flatnonzero(pending)
            s, lift = _damped_steps(g[sel], H[sel], mu[ia[sel]])
            xn = xa[sel] + s
            with np.errstate(all="ignore"):
                fn = fun(xn, ia[sel])
            f_old = f[ia[sel]]
            better = np.isfinite(fn) & (fn <= f_old + 1e-12 * np.abs(f_old))
            good = sel[better]
            x[ia[good]] = xn[better]
            f[ia[good]] = fn[better]
            mu[ia[good]] = lift[better] * 0.25
            mu[ia[sel[~better]]] = np.maximum(4 * lift[~better], 1e-3)
            pending[good] = False
        out = np.any(np.abs(x[ia]) > bound, axis=1)
        active[ia[out]] = False
    return BatchResult(x=x, fun=f, converged=converged, iterations=iters, grad_norm=gnorm)
