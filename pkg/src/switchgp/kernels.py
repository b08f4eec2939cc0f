"""Covariance-function expression trees with sigmoid change-point gating.

A kernel is a tree of Sum/Product nodes over five leaf families:

* ``SqExp``       - squared exponential with per-column (ARD) lengthscales
* ``Poly2``       - second-order polynomial, for quadratic physical laws
* ``Sdof``        - damped single-degree-of-freedom oscillator covariance
* ``SigmoidGate`` - rank-one gate sigma(z) sigma(z')^T on a bound column

Gates come in complementary pairs: a gate and its negated twin with the
same switch tag share one (a, x0) parameter pair, so gate + anti-gate sum
to one by construction.  Evaluation is pure; matrices are plain float64
ndarrays (training covariances are mirrored to be exactly symmetric).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import Dataset
from .errors import ConfigError, DomainError
from .params import Param, ParamVector

VARIANCE_BOUNDS = (1e-12, 1e6)
LENGTHSCALE_REL_BOUNDS = (1e-3, 1e3)  # in units of the column's std
GATE_SLOPE_BOUNDS = (0.01, 100.0)
SDOF_FD_STEP = 1e-6  # relative step on the transformed parameter


def sigmoid(x, a, x0):
    """Numerically stable logistic switch 1 / (1 + exp(-a (x - x0))).

    Accepts scalars or arrays; stable for |a (x - x0)| well past 700.
    """
    x = np.asarray(x, dtype=float)
    if not (np.all(np.isfinite(x)) and math.isfinite(a) and math.isfinite(x0)):
        raise ConfigError("sigmoid: non-finite input")
    t = np.clip(a * (x - x0), -700.0, 700.0)
    e = np.exp(-np.abs(t))
    out = np.where(t >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def _mirror_lower_to_upper(K):
    """Copy the lower triangle onto the upper one, block-wise and in place."""
    n = K.shape[0]
    b = 1024
    for i0 in range(0, n, b):
        i1 = min(i0 + b, n)
        blk = K[i0:i1, i0:i1]
        iu = np.triu_indices(i1 - i0, 1)
        blk[iu] = blk.T[iu]
        for j0 in range(i1, n, b):
            j1 = min(j0 + b, n)
            K[i0:i1, j0:j1] = K[j0:j1, i0:i1].T
    return K


_FEATURE_TRANSFORMS = {
    "identity": lambda v: v,
    "cos2": lambda v: np.cos(2.0 * v),
    "negate": lambda v: -v,
}


@dataclass(frozen=True)
class ColumnRef:
    """A dataset column plus an optional pointwise feature transform."""

    column: str
    transform: str = "identity"

    def __post_init__(self):
        if self.transform not in _FEATURE_TRANSFORMS:
            raise ConfigError(f"unknown feature transform {self.transform!r}")

    def resolve(self, data: Dataset) -> np.ndarray:
        return _FEATURE_TRANSFORMS[self.transform](data.column(self.column))


class KernelExpr:
    """Base class; nodes compose with + and *."""

    def __add__(self, other):
        return Sum((self, other))

    def __mul__(self, other):
        return Product((self, other))

    def leaves(self):
        yield self

    def columns(self):
        """Ordered unique column names consumed by the tree."""
        out = []
        for leaf in self.leaves():
            for c in leaf._columns():
                if c not in out:
                    out.append(c)
        return out

    # subclasses: _columns, _own_params, _eval, _eval_grads, _diag


def _scale_raw_grad(raw, value, transform):
    """Chain a raw-space gradient matrix into transformed (optimizer) space."""
    return raw * value if transform == "log" else raw


@dataclass(frozen=True)
class SqExp(KernelExpr):
    """sigma_f^2 exp(-1/2 sum_d (x_d - x'_d)^2 / l_d^2) over the bound columns."""

    cols: tuple
    name: str = "se_0"

    def _columns(self):
        return self.cols

    def param_name(self, what, col=None):
        return f"{self.name}_variance" if what == "variance" else f"{self.name}_ls_{col}"

    def _own_params(self, data):
        out = [Param(self.param_name("variance"), 1.0, *VARIANCE_BOUNDS, transform="log")]
        for c in self.cols:
            s = 1.0
            if data is not None:
                sd = float(np.std(data.column(c)))
                if sd > 0 and math.isfinite(sd):
                    s = sd
            lo, hi = LENGTHSCALE_REL_BOUNDS
            out.append(Param(self.param_name("ls", c), s, lo * s, hi * s, transform="log"))
        return out

    def _eval(self, values, data, data2):
        var = values[self.param_name("variance")]
        ls = np.array([values[self.param_name("ls", c)] for c in self.cols])
        A = np.column_stack([data.column(c) for c in self.cols]) / ls
        B = np.column_stack([data2.column(c) for c in self.cols]) / ls
        return var * np.exp(-0.5 * cdist(A, B, "sqeuclidean"))

    def _diag(self, values, data):
        var = values[self.param_name("variance")]
        return np.full(data.n, var)

    def _eval_grads(self, values, transforms, data):
        var = values[self.param_name("variance")]
        scaled = []
        for c in self.cols:
            l = values[self.param_name("ls", c)]
            x = data.column(c) / l
            scaled.append((x[:, None] - x[None, :]) ** 2)
        E = np.exp(-0.5 * sum(scaled))
        K = var * E
        grads = {}
        vn = self.param_name("variance")
        grads[vn] = _scale_raw_grad(E, var, transforms[vn])
        for c, D in zip(self.cols, scaled):
            ln = self.param_name("ls", c)
            l = values[ln]
            grads[ln] = _scale_raw_grad(K * D / l, l, transforms[ln])
        return K, grads


@dataclass(frozen=True)
class Poly2(KernelExpr):
    """sigma_L^2 (u u' + c)^2: draws are quadratic in the bound column."""

    col: str
    name: str = "poly2_0"

    def _columns(self):
        return (self.col,)

    def param_name(self, what):
        return f"{self.name}_{what}"

    def _own_params(self, data):
        return [
            Param(self.param_name("variance"), 1.0, *VARIANCE_BOUNDS, transform="log"),
            Param(self.param_name("offset"), 1.0, 0.0, 1e6, transform="identity"),
        ]

    def _eval(self, values, data, data2):
        var = values[self.param_name("variance")]
        c = values[self.param_name("offset")]
        u, v = data.column(self.col), data2.column(self.col)
        return var * (np.outer(u, v) + c) ** 2

    def _diag(self, values, data):
        var = values[self.param_name("variance")]
        c = values[self.param_name("offset")]
        u = data.column(self.col)
        return var * (u * u + c) ** 2

    def _eval_grads(self, values, transforms, data):
        var = values[self.param_name("variance")]
        c = values[self.param_name("offset")]
        u = data.column(self.col)
        B = np.outer(u, u) + c
        K = var * B * B
        vn, cn = self.param_name("variance"), self.param_name("offset")
        return K, {
            vn: _scale_raw_grad(B * B, var, transforms[vn]),
            cn: _scale_raw_grad(2.0 * var * B, c, transforms[cn]),
        }


@dataclass(frozen=True)
class Sdof(KernelExpr):
    """Damped harmonic oscillator covariance over a time column.

    K(tau) = s^2 / (4 m^2 z w^3) exp(-z w |tau|) (cos(wd tau) + (z w / wd) sin(wd |tau|))
    with wd = w sqrt(1 - z^2).  Hyperparameters are the oscillator's mass,
    damping ratio and natural frequency (rad/s), so fitted values read
    directly as physical properties.
    """

    col: str
    name: str = "sdof_0"

    def _columns(self):
        return (self.col,)

    def param_name(self, what):
        return f"{self.name}_{what}"

    def _own_params(self, data):
        return [
            Param(self.param_name("variance"), 1.0, 1e-12, 1e12, transform="log"),
            Param(self.param_name("mass"), 1.0, 1e-3, 1e3, transform="log"),
            Param(self.param_name("damping"), 0.05, 1e-4, 0.99, transform="log"),
            Param(self.param_name("omega"), 2.0 * math.pi, 1e-2, 1e4, transform="log"),
        ]

    def _values(self, values):
        return (
            values[self.param_name("variance")],
            values[self.param_name("mass")],
            values[self.param_name("damping")],
            values[self.param_name("omega")],
        )

    def _matrix(self, var, m, zeta, wn, t1, t2):
        if zeta >= 1.0:
            raise DomainError(
                f"{self.name}: damping ratio {zeta} >= 1 makes the damped frequency imaginary"
            )
        wd = wn * math.sqrt(1.0 - zeta * zeta)
        amp = var / (4.0 * m * m * zeta * wn ** 3)
        tau = t1[:, None] - t2[None, :]
        at = np.abs(tau)
        return amp * np.exp(-zeta * wn * at) * (
            np.cos(wd * tau) + (zeta * wn / wd) * np.sin(wd * at)
        )

    def _eval(self, values, data, data2):
        var, m, zeta, wn = self._values(values)
        return self._matrix(var, m, zeta, wn, data.column(self.col), data2.column(self.col))

    def _diag(self, values, data):
        var, m, zeta, wn = self._values(values)
        if zeta >= 1.0:
            raise DomainError(
                f"{self.name}: damping ratio {zeta} >= 1 makes the damped frequency imaginary"
            )
        return np.full(data.n, var / (4.0 * m * m * zeta * wn ** 3))

    def _eval_grads(self, values, transforms, data):
        # Central finite differences on the transformed parameters; the
        # analytic derivatives of the oscillator form are not worth the risk
        # and the matrix-level cost is negligible next to the factorization.
        t = data.column(self.col)
        K = self._eval(values, data, data)
        grads = {}
        for what in ("variance", "mass", "damping", "omega"):
            name = self.param_name(what)
            v = values[name]
            if transforms[name] == "log":
                t0 = math.log(v)
                h = SDOF_FD_STEP * max(1.0, abs(t0))
                lo, hi = math.exp(t0 - h), math.exp(t0 + h)
            else:
                h = SDOF_FD_STEP * max(1.0, abs(v))
                lo, hi = v - h, v + h
            vp, vm = dict(values), dict(values)
            vp[name], vm[name] = hi, lo
            grads[name] = (self._eval(vp, data, data) - self._eval(vm, data, data)) / (2.0 * h)
        return K, grads


@dataclass(frozen=True)
class SigmoidGate(KernelExpr):
    """Rank-one switch kernel sigma(z) sigma(z')^T on a bound column.

    ``negated=True`` gives the complementary gate (slope -a about the same
    x0); a gate/anti-gate pair with one switch tag shares its (a, x0)
    parameters, which makes gate + anti-gate == 1 exact.
    """

    ref: ColumnRef
    tag: str
    negated: bool = False

    def _columns(self):
        return (self.ref.column,)

    def param_name(self, what):
        return f"switch_{self.tag}_{what}"

    def _own_params(self, data):
        lo, hi = -1e3, 1e3
        init = 0.0
        if data is not None:
            z = self.ref.resolve(data)
            zmin, zmax = float(np.min(z)), float(np.max(z))
            if zmax > zmin:
                lo, hi = zmin, zmax
                init = 0.5 * (zmin + zmax)
        return [
            Param(self.param_name("a"), 1.0, *GATE_SLOPE_BOUNDS, transform="identity"),
            Param(self.param_name("x0"), init, lo, hi, transform="identity"),
        ]

    def _gate(self, values, data):
        a = values[self.param_name("a")]
        x0 = values[self.param_name("x0")]
        z = self.ref.resolve(data)
        return sigmoid(z, -a if self.negated else a, x0)

    def _eval(self, values, data, data2):
        return np.outer(self._gate(values, data), self._gate(values, data2))

    def _diag(self, values, data):
        s = self._gate(values, data)
        return s * s

    def _eval_grads(self, values, transforms, data):
        a = values[self.param_name("a")]
        x0 = values[self.param_name("x0")]
        z = self.ref.resolve(data)
        sgn = -1.0 if self.negated else 1.0
        s = sigmoid(z, sgn * a, x0)
        sp = s * (1.0 - s)  # d sigma / d t at t = sgn a (z - x0)
        ds_da = sp * sgn * (z - x0)
        ds_dx0 = sp * (-sgn * a)
        K = np.outer(s, s)
        an, xn = self.param_name("a"), self.param_name("x0")
        g_a = np.outer(ds_da, s)
        g_a += g_a.T
        g_x = np.outer(ds_dx0, s)
        g_x += g_x.T
        return K, {
            an: _scale_raw_grad(g_a, a, transforms[an]),
            xn: _scale_raw_grad(g_x, x0, transforms[xn]),
        }


class _Composite(KernelExpr):
    def __init__(self, children):
        children = tuple(children)
        if len(children) < 2:
            raise ConfigError(f"{type(self).__name__} needs at least 2 children")
        self.children = children

    def __eq__(self, other):
        return type(self) is type(other) and self.children == other.children

    def __hash__(self):
        return hash((type(self).__name__, self.children))

    def leaves(self):
        for c in self.children:
            yield from c.leaves()


class Sum(_Composite):
    def _eval(self, values, data, data2):
        out = self.children[0]._eval(values, data, data2)
        for c in self.children[1:]:
            out += c._eval(values, data, data2)
        return out

    def _diag(self, values, data):
        out = self.children[0]._diag(values, data)
        for c in self.children[1:]:
            out = out + c._diag(values, data)
        return out

    def _eval_grads(self, values, transforms, data):
        K = None
        grads = {}
        for c in self.children:
            Kc, gc = c._eval_grads(values, transforms, data)
            K = Kc if K is None else K + Kc
            for name, g in gc.items():
                if name in grads:
                    grads[name] = grads[name] + g
                else:
                    grads[name] = g
        return K, grads


class Product(_Composite):
    def _eval(self, values, data, data2):
        out = self.children[0]._eval(values, data, data2)
        for c in self.children[1:]:
            out *= c._eval(values, data, data2)
        return out

    def _diag(self, values, data):
        out = self.children[0]._diag(values, data)
        for c in self.children[1:]:
            out = out * c._diag(values, data)
        return out

    def _eval_grads(self, values, transforms, data):
        parts = [c._eval_grads(values, transforms, data) for c in self.children]
        Ks = [K for K, _ in parts]
        K = Ks[0].copy()
        for Kc in Ks[1:]:
            K *= Kc
        grads = {}
        for i, (_, gc) in enumerate(parts):
            if not gc:
                continue
            rest = None
            for j, Kj in enumerate(Ks):
                if j == i:
                    continue
                rest = Kj.copy() if rest is None else rest * Kj
            for name, g in gc.items():
                term = g * rest if rest is not None else g
                if name in grads:
                    grads[name] = grads[name] + term
                else:
                    grads[name] = term
        return K, grads


def validate_switch_tags(expr: KernelExpr) -> None:
    """Every leaf sharing a switch tag must gate the same column binding."""
    refs = {}
    for leaf in expr.leaves():
        if isinstance(leaf, SigmoidGate):
            prev = refs.get(leaf.tag)
            if prev is not None and prev != leaf.ref:
                raise ConfigError(
                    f"switch tag {leaf.tag!r} is bound to both {prev} and {leaf.ref}; "
                    "gates sharing a tag must gate the same column and transform"
                )
            refs[leaf.tag] = leaf.ref


def default_params(expr: KernelExpr, data: Dataset | None = None) -> ParamVector:
    """Build the kernel's ParamVector with default values and bounds.

    Switch-tagged gate pairs contribute one shared (a, x0) entry pair.
    Column statistics from ``data``, if given, seed lengthscale scales and
    switch-location bounds.
    """
    validate_switch_tags(expr)
    out, seen, leaf_names = [], set(), set()
    for leaf in expr.leaves():
        if not isinstance(leaf, SigmoidGate):
            if leaf.name in leaf_names:
                raise ConfigError(f"duplicate kernel leaf name {leaf.name!r}")
            leaf_names.add(leaf.name)
        for p in leaf._own_params(data):
            if p.name not in seen:
                seen.add(p.name)
                out.append(p)
    return ParamVector(out)


def _check_columns(expr, data):
    for col in expr.columns():
        if not data.has_column(col):
            raise ConfigError(f"kernel references unknown column {col!r}; available: {data.columns}")


def eval_kernel(expr: KernelExpr, params: ParamVector, X: Dataset, X2: Dataset | None = None):
    """Evaluate the covariance matrix K(X, X2) (K(X, X), mirrored, if X2 is None)."""
    _check_columns(expr, X)
    values = {p.name: p.value for p in params}
    if X2 is None:
        K = expr._eval(values, X, X)
        return _mirror_lower_to_upper(K)
    _check_columns(expr, X2)
    return expr._eval(values, X, X2)


def eval_kernel_diag(expr: KernelExpr, params: ParamVector, X: Dataset) -> np.ndarray:
    """Diagonal of K(X, X) without forming the full matrix."""
    _check_columns(expr, X)
    values = {p.name: p.value for p in params}
    return expr._diag(values, X)


def kernel_grad(expr: KernelExpr, params: ParamVector, X: Dataset):
    """d K(X, X) / d theta_i in transformed space, one matrix per parameter.

    The returned list is aligned with ``params``; entries the kernel does
    not consume get a zero matrix.
    """
    _check_columns(expr, X)
    values = {p.name: p.value for p in params}
    transforms = {p.name: p.transform for p in params}
    _, grads = expr._eval_grads(values, transforms, X)
    out = []
    for p in params:
        g = grads.get(p.name)
        if g is None:
            g = np.zeros((X.n, X.n))
        else:
            g = _mirror_lower_to_upper(g)
        out.append(g)
    return out


def se(*cols, name="se_0"):
    """Squared-exponential leaf over one or more columns."""
    if not cols:
        raise ConfigError("se() needs at least one column")
    return SqExp(tuple(cols), name=name)


def poly2(col, name="poly2_0"):
    """Second-order polynomial leaf."""
    return Poly2(col, name=name)


def sdof(col, name="sdof_0"):
    """Damped-oscillator leaf over a time column."""
    return Sdof(col, name=name)


def gate(col, tag, transform="identity"):
    """Sigmoid switch-in gate bound to ``col`` under switch tag ``tag``."""
    return SigmoidGate(ColumnRef(col, transform), tag)


def gate_out(col, tag, transform="identity"):
    """Complementary (switch-out) gate; shares (a, x0) with gate(col, tag)."""
    return SigmoidGate(ColumnRef(col, transform), tag, negated=True)
