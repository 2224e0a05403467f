"""Multi-start quasi-Newton minimization over the three rotation parameters.

BFGS (scipy) driven by central finite-difference gradients, with a
Nelder-Mead fallback when BFGS stalls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ParameterError


@dataclass(frozen=True)
class OptimizerOptions:
    max_iters: int = 500
    restarts: int = 8
    perturbation: float = 0.3
    seed: int = 0
    fd_step: float = 1e-5
    energy_tol: float = 1e-10
    grad_tol: float = 1e-7

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 0:
            raise ParameterError("max_iters must be >= 1 and restarts >= 0")
        for name in ("perturbation", "fd_step", "energy_tol", "grad_tol"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")


@dataclass
class LocalResult:
    x: np.ndarray
    fun: float
    converged: bool
    grad_norm: float
    n_evals: int
    method: str
    start: np.ndarray
    trace: list = field(default_factory=list)
    points: list = field(default_factory=list)


def fd_gradient(f: Callable, x: np.ndarray, h: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


class _Counted:
    def __init__(self, f):
        self.f = f
        self.n = 0

    def __call__(self, x):
        self.n += 1
        return float(self.f(np.asarray(x, dtype=float)))


def minimize_local(
    f: Callable,
    x0,
    options: OptimizerOptions,
    stop_tol: Optional[float] = None,
    max_polish: int = 3,
) -> LocalResult:
    """Minimize ``f`` from ``x0``.

    Without ``stop_tol`` convergence means gradient norm below ``grad_tol``
    and last objective change below ``energy_tol``.  With ``stop_tol`` the
    run also stops as soon as two successive iterations differ by less than
    ``stop_tol`` in objective, and that event alone counts as converged.
    """
    fc = _Counted(f)
    h = options.fd_step
    jac = lambda x: fd_gradient(fc, x, h)
    x = np.asarray(x0, dtype=float).copy()
    start = x.copy()
    trace = [fc(x)]
    points = [x.copy()]
    stopped = False

    def callback(intermediate_result):
        nonlocal stopped
        trace.append(float(intermediate_result.fun))
        points.append(np.array(intermediate_result.x, dtype=float))
        if stop_tol is not None and abs(trace[-1] - trace[-2]) < stop_tol:
            stopped = True
            raise StopIteration

    method = "bfgs"
    converged = False
    for _ in range(max_polish):
        res = minimize(
            fc,
            x,
            jac=jac,
            method="BFGS",
            callback=callback,
            options={"gtol": options.grad_tol, "norm": 2, "maxiter": options.max_iters},
        )
        x = np.asarray(res.x, dtype=float)
        if stopped:
            converged = True
            break
        g = float(np.linalg.norm(jac(x)))
        delta = 0.0 if res.nit == 0 else abs(trace[-1] - trace[-2])
        if g < options.grad_tol and delta < options.energy_tol:
            converged = True
            break
    else:
        # BFGS stalled: simplex fallback from the best point so far
        method = "nelder-mead"
        res = minimize(
            fc,
            x,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": options.energy_tol, "maxiter": 20 * options.max_iters},
        )
        if res.fun < fc(x):
            x = np.asarray(res.x, dtype=float)
            trace.append(float(res.fun))
            points.append(x.copy())
        converged = bool(res.success) and float(np.linalg.norm(jac(x))) < options.grad_tol

    fun = fc(x)
    g = float(np.linalg.norm(jac(x)))
    return LocalResult(x, fun, converged, g, fc.n, method, start, trace, points)


def start_points(
    center,
    options: OptimizerOptions,
    rng: np.random.Generator,
    extra: Sequence = (),
) -> list[np.ndarray]:
    """``center``, any ``extra`` starts, then ``restarts`` random perturbations of center."""
    center = np.asarray(center, dtype=float)
    points = [center] + [np.asarray(e, dtype=float) for e in extra]
    for _ in range(options.restarts):
        points.append(center + rng.normal(scale=options.perturbation, size=center.shape))
    return points


def multistart(
    f: Callable,
    starts: Sequence,
    options: OptimizerOptions,
    stop_tol: Optional[float] = None,
) -> tuple[LocalResult, list[LocalResult]]:
    """Run ``minimize_local`` from every start; the lowest converged objective wins.

    Falls back to the lowest objective overall when nothing converged.
    """
    runs = [minimize_local(f, x0, options, stop_tol=stop_tol) for x0 in starts]
    converged = [r for r in runs if r.converged]
    pool = converged or runs
    best = min(pool, key=lambda r: r.fun)
    return best, runs
