"""Right-preconditioned restarted GMRES and preconditioned CG.

Iteration counts are preconditioned matvecs: one application of A plus one
of the preconditioner.  Within a restart cycle the residual is tracked by
the Givens-rotation estimate, which is free; whenever a cycle ends, whether
by restart, by the estimate crossing the tolerance, or by happy breakdown,
the TRUE residual b - A x is recomputed and is the only thing allowed to
declare convergence.  A converged report therefore always satisfies
final_relres < tol with the actual residual, never with the estimate.

The preconditioned basis vectors are stored alongside the orthonormal ones
(the update is Z y rather than M^-1 V y), which costs restart extra vectors
and in exchange applies the preconditioner exactly once per iteration.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, NotSpdError
from .sparse import spmv

__all__ = ["SolverConfig", "SolveReport", "relres", "gmres", "cg"]

_BREAKDOWN_EPS = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    restart: int = 30
    maxit: int = 500

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.restart < 1 or self.maxit < 1:
            raise ValueError("restart and maxit must be at least 1")


@dataclass
class SolveReport:
    method: str
    precond: str
    converged: bool
    iterations: int
    final_relres: float
    history: list
    wall_seconds: float
    x: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "method": self.method,
            "precond": self.precond,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_relres": self.final_relres,
            "history": list(self.history),
            "wall_seconds": self.wall_seconds,
        }


def relres(a, x, b):
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        raise ValueError("relative residual is undefined for a zero right-hand side")
    return float(np.linalg.norm(b - spmv(a, x)) / bnorm)


def _check_finite(value, iteration):
    if not np.all(np.isfinite(value)):
        raise DivergenceError(f"non-finite value at iteration {iteration}")


def _gmres_cycle(apply_a, apply_m, r, restart, abs_tol, iter_offset):
    """One restart cycle; returns (dx, estimates, basis, steps, happy).

    basis is the orthonormal V with steps+1 columns, exposed so invariant
    tests can measure the Modified-Gram-Schmidt orthogonality directly.
    """
    n = r.shape[0]
    beta = np.linalg.norm(r)
    v = np.zeros((restart + 1, n))
    z = np.zeros((restart, n))
    h = np.zeros((restart + 1, restart))
    cs = np.zeros(restart)
    sn = np.zeros(restart)
    g = np.zeros(restart + 1)
    g[0] = beta
    v[0] = r / beta
    estimates = []
    happy = False
    steps = 0
    for j in range(restart):
        z[j] = apply_m(v[j])
        w = apply_a(z[j])
        _check_finite(w, iter_offset + j + 1)
        for i in range(j + 1):
            h[i, j] = np.dot(w, v[i])
            w -= h[i, j] * v[i]
        # unconditional second Gram-Schmidt pass: keeps the basis orthonormal
        # to rounding even when the cycle runs deep into convergence
        for i in range(j + 1):
            correction = np.dot(w, v[i])
            h[i, j] += correction
            w -= correction * v[i]
        h[j + 1, j] = np.linalg.norm(w)
        steps = j + 1
        if h[j + 1, j] > _BREAKDOWN_EPS * abs(h[: j + 2, j]).max():
            v[j + 1] = w / h[j + 1, j]
        else:
            happy = True
        # apply accumulated Givens rotations, then generate this column's
        for i in range(j):
            t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
            h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
            h[i, j] = t
        denom = np.hypot(h[j, j], h[j + 1, j])
        cs[j] = h[j, j] / denom
        sn[j] = h[j + 1, j] / denom
        h[j, j] = denom
        h[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        estimates.append(abs(g[j + 1]))
        if happy or abs(g[j + 1]) < abs_tol:
            break
    y = np.linalg.solve(np.triu(h[:steps, :steps]), g[:steps])
    dx = z[:steps].T @ y
    return dx, estimates, v[: steps + 1], steps, happy


def gmres(a, b, precond=None, config=None, x0=None, precond_label="none"):
    """Restarted GMRES on A M^-1, solution mapped back through M^-1."""
    cfg = config or SolverConfig()
    b = np.ascontiguousarray(b, dtype=np.float64)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        raise ValueError("zero right-hand side; the solution is trivially zero")
    apply_m = precond if precond is not None else lambda r: r.copy()
    apply_a = lambda x: spmv(a, x)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    t0 = time.perf_counter()
    r = b - apply_a(x)
    rel = float(np.linalg.norm(r) / bnorm)
    history = [rel]
    iterations = 0
    converged = rel < cfg.tol
    while not converged and iterations < cfg.maxit:
        budget = min(cfg.restart, cfg.maxit - iterations)
        dx, estimates, _, steps, happy = _gmres_cycle(
            apply_a, apply_m, r, budget, cfg.tol * bnorm, iterations
        )
        x += dx
        iterations += steps
        history.extend(e / bnorm for e in estimates)
        r = b - apply_a(x)
        _check_finite(r, iterations)
        rel = float(np.linalg.norm(r) / bnorm)
        # the Givens estimate ends the cycle; the true residual has the
        # final word on convergence and on the recorded history
        history[-1] = rel
        if rel < cfg.tol:
            converged = True
        # a happy breakdown that fails the true-residual check just falls
        # through to the next cycle; maxit bounds the total work either way
    wall = time.perf_counter() - t0
    return SolveReport(
        method="gmres",
        precond=precond_label,
        converged=converged,
        iterations=iterations,
        final_relres=rel,
        history=history,
        wall_seconds=wall,
        x=x,
    )


def cg(a, b, precond=None, config=None, x0=None, precond_label="none"):
    """Preconditioned conjugate gradients; raises NotSpdError off the cone."""
    cfg = config or SolverConfig()
    b = np.ascontiguousarray(b, dtype=np.float64)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        raise ValueError("zero right-hand side; the solution is trivially zero")
    apply_m = precond if precond is not None else lambda r: r.copy()
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    t0 = time.perf_counter()
    r = b - spmv(a, x)
    rel = float(np.linalg.norm(r) / bnorm)
    history = [rel]
    converged = rel < cfg.tol
    iterations = 0
    z = apply_m(r)
    rho = float(np.dot(r, z))
    p = z.copy()
    while not converged and iterations < cfg.maxit:
        q = spmv(a, p)
        curvature = float(np.dot(p, q))
        if curvature <= 0.0:
            raise NotSpdError(
                f"nonpositive curvature p^T A p = {curvature:.3e} at iteration "
                f"{iterations + 1}: the operator pair is not SPD"
            )
        alpha = rho / curvature
        x += alpha * p
        r -= alpha * q
        iterations += 1
        _check_finite(r, iterations)
        rel = float(np.linalg.norm(r) / bnorm)
        history.append(rel)
        if rel < cfg.tol:
            true_rel = relres(a, x, b)
            history[-1] = true_rel
            rel = true_rel
            if true_rel < cfg.tol:
                converged = True
                break
        z = apply_m(r)
        rho_next = float(np.dot(r, z))
        beta = rho_next / rho
        rho = rho_next
        p = z + beta * p
    wall = time.perf_counter() - t0
    return SolveReport(
        method="cg",
        precond=precond_label,
        converged=converged,
        iterations=iterations,
        final_relres=rel,
        history=history,
        wall_seconds=wall,
        x=x,
    )
