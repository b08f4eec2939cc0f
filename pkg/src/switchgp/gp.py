"""Exact Gaussian-process regression with a zero prior mean.

Provides the negative log marginal likelihood (the training objective),
its gradient in transformed hyperparameter space, posterior prediction,
prior sampling, and a scikit-learn style estimator wrapping the lot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin

from .dataset import Dataset, as_dataset
from .errors import ConfigError, DataError, NumericalError
from .kernels import KernelExpr, eval_kernel, eval_kernel_diag, kernel_grad
from .optim import JointCache, OptConfig, minimize
from .params import Param, ParamVector, apply_overrides

LOG_2PI = math.log(2.0 * math.pi)
JITTER_START = 1e-8
JITTER_MAX = 1e-2
PREDICT_CHUNK = 2048


def cholesky_with_jitter(A):
    """Lower Cholesky of A + jitter*I.

    The jitter starts at 1e-8 of the mean diagonal and escalates by a
    factor 10 on failure, up to 1e-2 of the mean diagonal; past that a
    NumericalError carrying the last attempted jitter is raised.
    """
    n = A.shape[0]
    scale = float(np.mean(np.diagonal(A)))
    if not math.isfinite(scale) or scale <= 0:
        scale = 1.0
    work = np.array(A, dtype=float)
    added = 0.0
    jitter = JITTER_START * scale
    while True:
        bump = jitter - added
        work[np.diag_indices(n)] += bump
        added = jitter
        try:
            L = cholesky(work, lower=True, check_finite=False)
            return L, jitter
        except np.linalg.LinAlgError:
            pass
        except ValueError:
            pass
        if jitter >= JITTER_MAX * scale:
            raise NumericalError(
                f"Cholesky factorization failed at jitter {jitter:.3e}", jitter=jitter
            )
        jitter *= 10.0


@dataclass
class Posterior:
    """Per-point posterior mean and variance (latent and noise-inclusive)."""

    mean: np.ndarray
    var_latent: np.ndarray
    var_noisy: np.ndarray

    @property
    def std_latent(self):
        return np.sqrt(self.var_latent)

    @property
    def std_noisy(self):
        return np.sqrt(self.var_noisy)


@dataclass
class GPState:
    """A trained exact GP: kernel, parameters, factorized training covariance."""

    expr: KernelExpr
    params: ParamVector
    noise_variance: float
    data: Dataset
    L: np.ndarray
    alpha: np.ndarray
    jitter: float


def _noisy_cov(expr, params, noise_variance, data):
    K = eval_kernel(expr, params, data)
    K[np.diag_indices(data.n)] += noise_variance
    return K


def build_state(expr, params, noise_variance, data) -> GPState:
    if data.y is None:
        raise DataError("training data has no target column")
    K = _noisy_cov(expr, params, noise_variance, data)
    L, jitter = cholesky_with_jitter(K)
    alpha = cho_solve((L, True), data.y, check_finite=False)
    return GPState(expr, params, noise_variance, data, L, alpha, jitter)


def nlml(expr, params, noise_variance, data) -> float:
    """Negative log marginal likelihood 1/2 y'a + sum log L_ii + n/2 log 2pi."""
    state = build_state(expr, params, noise_variance, data)
    return float(
        0.5 * data.y @ state.alpha
        + np.sum(np.log(np.diagonal(state.L)))
        + 0.5 * data.n * LOG_2PI
    )


def nlml_grad(expr, params, noise_variance, data) -> np.ndarray:
    """Gradient of the NLML in transformed space.

    Returns one component per entry of ``params`` plus a final component
    for log(noise variance).
    """
    state = build_state(expr, params, noise_variance, data)
    n = data.n
    Kinv = cho_solve((state.L, True), np.eye(n), check_finite=False)
    W = Kinv - np.outer(state.alpha, state.alpha)
    grads = kernel_grad(expr, params, data)
    out = np.empty(len(params) + 1)
    for i, dK in enumerate(grads):
        out[i] = 0.5 * np.sum(W * dK)
    out[-1] = 0.5 * noise_variance * np.trace(W)
    return out


def nlml_value_grad(expr, params, noise_variance, data):
    """NLML and its gradient from one shared factorization."""
    state = build_state(expr, params, noise_variance, data)
    value = float(
        0.5 * data.y @ state.alpha
        + np.sum(np.log(np.diagonal(state.L)))
        + 0.5 * data.n * LOG_2PI
    )
    n = data.n
    Kinv = cho_solve((state.L, True), np.eye(n), check_finite=False)
    W = Kinv - np.outer(state.alpha, state.alpha)
    grads = kernel_grad(expr, params, data)
    g = np.empty(len(params) + 1)
    for i, dK in enumerate(grads):
        g[i] = 0.5 * np.sum(W * dK)
    g[-1] = 0.5 * noise_variance * np.trace(W)
    return value, g


def predict(state: GPState, Xstar: Dataset) -> Posterior:
    """Posterior mean and variance at new inputs, chunked over test points."""
    n_star = Xstar.n
    mean = np.empty(n_star)
    var_latent = np.empty(n_star)
    for i0 in range(0, n_star, PREDICT_CHUNK):
        chunk = Xstar.select(np.arange(i0, min(i0 + PREDICT_CHUNK, n_star)))
        Ks = eval_kernel(state.expr, state.params, state.data, chunk)
        mean[i0 : i0 + chunk.n] = Ks.T @ state.alpha
        v = solve_triangular(state.L, Ks, lower=True, check_finite=False)
        kd = eval_kernel_diag(state.expr, state.params, chunk)
        var_latent[i0 : i0 + chunk.n] = kd - np.sum(v * v, axis=0)
    np.clip(var_latent, 0.0, None, out=var_latent)
    return Posterior(mean, var_latent, var_latent + state.noise_variance)


def sample_prior(expr, params, Xstar: Dataset, n_draws: int, seed: int) -> np.ndarray:
    """Draws from the zero-mean GP prior at Xstar; shape (n_points, n_draws)."""
    K = eval_kernel(expr, params, Xstar)
    L, _ = cholesky_with_jitter(K)
    z = np.random.default_rng(seed).standard_normal((Xstar.n, n_draws))
    return L @ z


NOISE_PARAM = "noise_variance"


def combined_param_vector(params: ParamVector, noise_variance, noise_bounds) -> ParamVector:
    lo, hi = noise_bounds
    return params.extended(
        [Param(NOISE_PARAM, float(noise_variance), float(lo), float(hi), transform="log")]
    )


def split_param_vector(combined: ParamVector):
    entries = list(combined)
    return ParamVector(entries[:-1]), entries[-1].value


class GPRegressor(BaseEstimator, RegressorMixin):
    """Exact GP regression with a kernel given as an expression or DSL string.

    Parameters
    ----------
    kernel : str or KernelExpr
        Covariance spec, e.g. ``"se(U,theta)"`` or
        ``"sw(U,W)*poly2(U) + swneg(U,W)*se(U)"``.
    params : dict, optional
        Per-parameter overrides: name -> value or {value, lower, upper}.
    noise_variance : float
        Initial observation-noise variance (log-transformed during fitting).
    noise_bounds : (float, float)
        Box bounds for the noise variance.
    optimize : bool
        If False, keep the initial hyperparameters (no NLML fit).
    n_restarts, max_iter, grad_tol, seed
        Multi-start optimizer settings; restarts beyond the first start
        from bound-uniform samples drawn with the given seed.
    standardize_targets : bool
        Fit on (y - mean) / std and undo the scaling on prediction.
    columns : list of str, optional
        Column names when X is passed as a bare ndarray.
    """

    def __init__(
        self,
        kernel="se(x0)",
        params=None,
        noise_variance=0.1,
        noise_bounds=(1e-8, 1e3),
        optimize=True,
        n_restarts=5,
        max_iter=200,
        grad_tol=1e-8,
        seed=0,
        standardize_targets=False,
        columns=None,
    ):
        self.kernel = kernel
        self.params = params
        self.noise_variance = noise_variance
        self.noise_bounds = noise_bounds
        self.optimize = optimize
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.grad_tol = grad_tol
        self.seed = seed
        self.standardize_targets = standardize_targets
        self.columns = columns

    def _build_kernel(self, data):
        from .dsl import build_kernel  # local import to avoid a cycle

        if isinstance(self.kernel, KernelExpr):
            expr = self.kernel
            from .kernels import default_params as _dp

            base = _dp(expr, data)
        else:
            expr, base = build_kernel(str(self.kernel), data)
        if isinstance(self.params, ParamVector):
            return expr, self.params
        return expr, apply_overrides(base, self.params)

    def fit(self, X, y=None):
        data = as_dataset(X, columns=self.columns, y=y)
        if data.y is None:
            raise DataError("fit requires targets")
        self.y_mean_, self.y_std_ = 0.0, 1.0
        yw = data.y
        if self.standardize_targets:
            self.y_mean_ = float(np.mean(data.y))
            self.y_std_ = float(np.std(data.y))
            if self.y_std_ <= 0:
                raise DataError("targets have zero variance; cannot standardize")
            yw = (data.y - self.y_mean_) / self.y_std_
        work = data.with_target(yw)

        expr, kparams = self._build_kernel(work)
        combined = combined_param_vector(kparams, self.noise_variance, self.noise_bounds)

        if self.optimize:
            def joint(vec):
                pv = combined.with_transformed(vec)
                kp, nv = split_param_vector(pv)
                return nlml_value_grad(expr, kp, nv, work)

            cache = JointCache(joint)
            config = OptConfig(
                restarts=self.n_restarts,
                max_iter=self.max_iter,
                grad_tol=self.grad_tol,
                seed=self.seed,
            )
            self.fit_report_ = minimize(cache.objective, cache.gradient, combined, config)
            fitted = self.fit_report_.best_params
        else:
            self.fit_report_ = None
            fitted = combined

        kp, nv = split_param_vector(fitted)
        self.expr_ = expr
        self.params_ = kp
        self.noise_variance_ = nv
        self.state_ = build_state(expr, kp, nv, work)
        self.nlml_ = nlml(expr, kp, nv, work)
        return self

    def posterior(self, X) -> Posterior:
        """Posterior in original target units."""
        data = as_dataset(X, columns=self.columns)
        post = predict(self.state_, data)
        s2 = self.y_std_ ** 2
        return Posterior(
            post.mean * self.y_std_ + self.y_mean_,
            post.var_latent * s2,
            post.var_noisy * s2,
        )

    def predict(self, X, return_std=False, include_noise=True):
        post = self.posterior(X)
        if not return_std:
            return post.mean
        std = post.std_noisy if include_noise else post.std_latent
        return post.mean, std
