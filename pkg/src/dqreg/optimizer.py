"""Derivative-free minimisers: Nelder-Mead and the NM + constrained-refinement hybrid.

All routines *minimise*; callers pass the negative log-likelihood. Non-finite
objective values are treated as ``+inf`` so the simplex simply moves away
from them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["OptBudget", "OptResult", "nelder_mead", "constrained_refine", "nmcob", "project_feasible"]

PENALTY_LEVEL = 1e10
FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class OptBudget:
    """Iteration budget and tolerances; ``max_iters`` counts NM iterations."""

    max_iters: int = 500
    xtol: float = 1e-6
    ftol: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 0 or self.xtol <= 0 or self.ftol <= 0:
            raise ValueError("budgets must be positive")


@dataclass
class OptResult:
    x: np.ndarray
    fun: float
    n_iter: int = 0
    n_fev: int = 0
    converged: bool = False
    degenerate: bool = False
    residual: float = 0.0


def _safe(objective):
    def f(x):
        val = float(objective(x))
        return val if np.isfinite(val) else np.inf

    return f


def nelder_mead(objective: Callable, x0, budget: OptBudget = OptBudget()) -> OptResult:
    """Minimise ``objective`` with the Nelder-Mead simplex method.

    Reflection, expansion, contraction and shrink coefficients are 1, 2, 0.5
    and 0.5. The initial simplex adds ``max(0.05, 0.1 |x0_i|)`` to each
    coordinate in turn. Iteration stops when the budget is spent or when the
    spread of simplex values is below ``ftol`` and its diameter below ``xtol``.

    Returns
    -------
    OptResult
        The best vertex found. If every initial vertex is at the penalty level
        the start is returned unchanged with ``degenerate=True``.
    """
    f = _safe(objective)
    x0 = np.asarray(x0, dtype=float).copy()
    n = x0.size
    if n == 0:
        return OptResult(x0, f(x0), n_fev=1, converged=True)
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        sim[i + 1, i] += max(0.05, 0.1 * abs(x0[i]))
    fs = np.array([f(v) for v in sim])
    nfev = n + 1
    if np.all(fs >= PENALTY_LEVEL):
        return OptResult(x0, fs[0], n_fev=nfev, degenerate=True)

    it = 0
    converged = False
    while it < budget.max_iters:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if fs[-1] - fs[0] <= budget.ftol and np.max(np.abs(sim[1:] - sim[0])) <= budget.xtol:
            converged = True
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        nfev += 1
        if fr < fs[0]:
            xe = centroid + 2.0 * (xr - centroid)
            fe = f(xe)
            nfev += 1
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            nfev += 1
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            nfev += 1
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
        fs[1:] = [f(v) for v in sim[1:]]
        nfev += n
    best = int(np.argmin(fs))
    return OptResult(sim[best].copy(), float(fs[best]), n_iter=it, n_fev=nfev, converged=converged)


def _fd_grad(fun, x, step=1e-7):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return g


def project_feasible(residual: Callable, x, tol: float = 1e-12, max_steps: int = 100) -> np.ndarray:
    """Move ``x`` onto ``residual(x) = 0`` with minimum-norm Gauss-Newton steps."""
    x = np.asarray(x, dtype=float).copy()
    r = float(residual(x))
    for _ in range(max_steps):
        if abs(r) <= tol:
            break
        g = _fd_grad(residual, x)
        gg = float(g @ g)
        if gg == 0.0 or not np.isfinite(gg):
            break
        step = r * g / gg
        t = 1.0
        # backtrack so that |r| decreases
        while t > 1e-6:
            cand = x - t * step
            rc = float(residual(cand))
            if np.isfinite(rc) and abs(rc) < abs(r):
                break
            t *= 0.5
        else:
            break
        x, r = cand, rc
    return x


def constrained_refine(
    objective: Callable,
    constraint_residual: Callable,
    x0,
    budget: OptBudget = OptBudget(max_iters=100),
    mus=(1e2, 1e4, 1e6),
) -> OptResult:
    """Minimise ``objective`` subject to ``constraint_residual(x) = 0``.

    Nelder-Mead runs on ``objective + mu * residual**2`` for each ``mu`` in
    turn, the budget split evenly, followed by a Gauss-Newton projection onto
    the constraint. The start is returned if it is feasible and nothing
    better was found.
    """
    f = _safe(objective)
    x0 = np.asarray(x0, dtype=float)
    r0 = float(constraint_residual(x0))
    f0 = f(x0)
    start_penalised = f0 + mus[-1] * r0 * r0

    x = x0.copy()
    n_iter = n_fev = 0
    per = np.array_split(np.arange(budget.max_iters), len(mus))
    for mu, chunk in zip(mus, per):
        if len(chunk) == 0:
            continue

        def penalised(z, mu=mu):
            r = constraint_residual(z)
            return f(z) + mu * r * r

        res = nelder_mead(penalised, x, OptBudget(len(chunk), budget.xtol, budget.ftol))
        x = res.x
        n_iter += res.n_iter
        n_fev += res.n_fev

    x = project_feasible(constraint_residual, x)
    fx = f(x)
    r = float(constraint_residual(x))
    if abs(r0) < FEASIBILITY_TOL and not fx <= start_penalised:
        return OptResult(x0.copy(), f0, n_iter, n_fev + 1, False, residual=r0)
    return OptResult(x, fx, n_iter, n_fev + 1, abs(r) < FEASIBILITY_TOL, residual=r)


def nmcob(
    objective: Callable,
    constraint_residual: Callable,
    x0,
    nm_iters: int = 400,
    refine_iters: int = 100,
    xtol: float = 1e-6,
    ftol: float = 1e-8,
) -> OptResult:
    """Unconstrained Nelder-Mead followed by constrained refinement.

    Never returns a point worse than a feasible start.
    """
    f = _safe(objective)
    x0 = np.asarray(x0, dtype=float)
    nm = nelder_mead(objective, x0, OptBudget(nm_iters, xtol, ftol))
    if nm.degenerate:
        nm.residual = float(constraint_residual(x0))
        return nm
    ref = constrained_refine(objective, constraint_residual, nm.x, OptBudget(refine_iters, xtol, ftol))
    ref.n_iter += nm.n_iter
    ref.n_fev += nm.n_fev
    r0 = float(constraint_residual(x0))
    if abs(r0) < FEASIBILITY_TOL and (not ref.fun <= f(x0) or abs(ref.residual) >= FEASIBILITY_TOL):
        return OptResult(x0.copy(), f(x0), ref.n_iter, ref.n_fev, False, residual=r0)
    return ref
