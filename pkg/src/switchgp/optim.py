"""Bounded, multi-start quasi-Newton minimization plus a gradient checker.

Objectives and gradients are callables over the *transformed* parameter
vector (see :mod:`switchgp.params`).  The engine is L-BFGS-B, which does
bound clipping by projection; restarts beyond the first sample start
points uniformly inside the transformed bounds from a seeded generator,
so the k-th restart is the same regardless of how many restarts run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .errors import OptimizationError
from .params import ParamVector

_BIG = 1e25  # stands in for a non-finite objective during line searches
_BOUND_SAMPLE_CAP = 20.0  # sampling range for restarts when a bound is infinite


@dataclass
class OptConfig:
    restarts: int = 5
    max_iter: int = 200
    grad_tol: float = 1e-8
    ftol: float = 1e-12
    max_linesearch: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise OptimizationError("restarts must be >= 1")
        if self.grad_tol <= 0 or self.ftol <= 0:
            raise OptimizationError("tolerances must be > 0")


@dataclass
class FitReport:
    best_value: float
    best_params: ParamVector
    best_restart: int
    restart_values: list
    trajectories: list
    converged: bool
    active_bounds: list
    duration_s: float = 0.0


class JointCache:
    """Wraps a joint (value, gradient) function so separate objective and
    gradient callables share one evaluation per point."""

    def __init__(self, fn):
        self.fn = fn
        self._key = None
        self._out = None

    def _eval(self, x):
        x = np.asarray(x, dtype=float)
        key = x.tobytes()
        if key != self._key:
            self._out = self.fn(x)
            self._key = key
        return self._out

    def objective(self, x):
        return self._eval(x)[0]

    def gradient(self, x):
        return self._eval(x)[1]


class _Memo:
    """Caches the latest objective/gradient evaluations keyed by x bytes,
    so the iteration callback can read accepted values for free."""

    def __init__(self, objective, gradient):
        self.objective = objective
        self.gradient = gradient
        self.cache = {}

    def __call__(self, x):
        key = x.tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        try:
            f = float(self.objective(x))
            g = np.asarray(self.gradient(x), dtype=float)
            if not np.isfinite(f):
                f, g = _BIG, np.zeros_like(x)
        except ArithmeticError:
            f, g = _BIG, np.zeros_like(x)
        if len(self.cache) > 8:
            self.cache.clear()
        self.cache[key] = (f, g)
        return f, g

    def value(self, x):
        return self(x)[0]


def _start_points(params, config):
    x0 = params.transformed()
    bounds = params.transformed_bounds()
    rng = np.random.default_rng(config.seed)
    starts = [x0]
    for _ in range(config.restarts - 1):
        pt = np.empty(len(x0))
        for i, (lo, hi) in enumerate(bounds):
            lo_s = lo if np.isfinite(lo) else x0[i] - _BOUND_SAMPLE_CAP
            hi_s = hi if np.isfinite(hi) else x0[i] + _BOUND_SAMPLE_CAP
            pt[i] = rng.uniform(lo_s, hi_s)
        starts.append(pt)
    return starts, bounds


def minimize(objective, gradient, params: ParamVector, config: OptConfig) -> FitReport:
    """Multi-start bounded minimization; returns the best restart's result.

    Raises OptimizationError if no restart reaches a finite objective.
    """
    t0 = time.perf_counter()
    starts, bounds = _start_points(params, config)
    memo = _Memo(objective, gradient)

    best = None
    restart_values = []
    trajectories = []
    converged = False
    for r, x0 in enumerate(starts):
        f0 = memo.value(np.asarray(x0, dtype=float))
        if f0 >= _BIG:
            restart_values.append(float("nan"))
            trajectories.append([])
            continue
        traj = [f0]
        res = _scipy_minimize(
            memo,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            callback=lambda xk: traj.append(memo.value(xk)),
            options={
                "maxiter": config.max_iter,
                "gtol": config.grad_tol,
                "ftol": config.ftol,
                "maxls": config.max_linesearch,
            },
        )
        fval = float(res.fun)
        restart_values.append(fval)
        trajectories.append(traj)
        if fval < _BIG and (best is None or fval < best[0]):
            best = (fval, np.array(res.x), r)
            converged = bool(res.success) or converged
    if best is None:
        raise OptimizationError(
            f"no finite objective in any of {config.restarts} restart(s)"
        )

    fval, x, r = best
    fitted = params.with_transformed(x)
    active = []
    for p, (lo, hi), xi in zip(fitted, bounds, x):
        if xi <= lo + 1e-12 or xi >= hi - 1e-12:
            active.append(p.name)
    return FitReport(
        best_value=fval,
        best_params=fitted,
        best_restart=r,
        restart_values=restart_values,
        trajectories=trajectories,
        converged=converged,
        active_bounds=active,
        duration_s=time.perf_counter() - t0,
    )


@dataclass
class FdCheckRow:
    name: str
    analytic: float
    fd: float
    rel_error: float


@dataclass
class FdCheckResult:
    max_rel_error: float
    rows: list = field(default_factory=list)

    @property
    def worst(self) -> FdCheckRow:
        return max(self.rows, key=lambda r: r.rel_error)


def fd_check(objective, gradient, params: ParamVector, h: float) -> FdCheckResult:
    """Central-difference check of a gradient, per transformed coordinate.

    Relative error is measured against the finite-difference value (the
    oracle), floored to keep near-zero components from dominating.
    """
    if h <= 0:
        raise OptimizationError("fd_check step h must be > 0")
    x = params.transformed()
    g = np.asarray(gradient(x), dtype=float)
    if g.shape != x.shape:
        raise OptimizationError(
            f"gradient returned shape {g.shape}, expected {x.shape}"
        )
    fd = np.empty_like(x)
    for i in range(len(x)):
        hi = h * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += hi
        xm[i] -= hi
        fd[i] = (objective(xp) - objective(xm)) / (2.0 * hi)
    floor = 1e-12 + 1e-9 * float(np.max(np.abs(fd), initial=0.0))
    rows = []
    for i, p in enumerate(params):
        denom = max(abs(fd[i]), floor)
        rows.append(FdCheckRow(p.name, float(g[i]), float(fd[i]), abs(g[i] - fd[i]) / denom))
    return FdCheckResult(max_rel_error=max(r.rel_error for r in rows), rows=rows)
