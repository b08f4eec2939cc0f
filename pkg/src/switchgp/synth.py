"""Synthetic regime-switching datasets with known ground truth.

Three generators:

* ``gen_regime``      - wind-loading style: a quadratic lift response gated
  on direction and speed switches, plus a smooth baseline and noise that is
  optionally input-dependent.
* ``gen_oscillator``  - flight-test style: a slow quasi-static response to
  smooth channels plus damped-oscillator bursts gated on a control angle.
* ``gen_changepoint`` - one-dimensional blend of a short- and a
  long-lengthscale process across a sigmoid switch.

Generators draw their smooth components from locally defined covariances
and simulate oscillators in the time domain, so they stay independent of
the kernel implementations they are used to test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from .dataset import Dataset
from .errors import ConfigError

TWO_PI = 2.0 * math.pi


def _sigmoid(z, a, x0):
    t = np.clip(a * (np.asarray(z, dtype=float) - x0), -700.0, 700.0)
    e = np.exp(-np.abs(t))
    return np.where(t >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _se_draw(rng, x, variance, lengthscale):
    """One sample path from a squared-exponential prior over 1-D inputs."""
    x = np.asarray(x, dtype=float)
    d = x[:, None] - x[None, :]
    K = variance * np.exp(-0.5 * (d / lengthscale) ** 2)
    K[np.diag_indices(len(x))] += 1e-10 * max(variance, 1.0)
    L = np.linalg.cholesky(K)
    return L @ rng.standard_normal(len(x))


# ---------------------------------------------------------------------------
# Wind-loading style regime generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeSpec:
    """Quadratic lift gated on direction and speed, smooth baseline elsewhere.

    The response is
    ``y = g_dir(cos 2 theta) * g_speed(U) * lift_coeff * U^2
    + (1 - g_dir)(1 - g_speed) * smooth(U) + noise`` with logistic gates.
    """

    n: int = 2500
    speed_range: tuple = (0.0, 40.0)
    angle_range: tuple = (0.0, TWO_PI)
    dir_slope: float = 8.0
    dir_location: float = 0.4  # on cos(2 theta)
    speed_slope: float = 0.4
    speed_location: float = 18.0
    lift_coeff: float = 0.004
    smooth_variance: float = 1.0
    smooth_lengthscale: float = 8.0
    noise: str = "constant"  # "constant" | "linear"
    noise_std: float = 0.25
    noise_base: float = 0.1
    noise_slope: float = 0.012
    seed: int = 0

    def validate(self):
        if self.n < 10:
            raise ConfigError("RegimeSpec: n must be >= 10")
        for lo, hi in (self.speed_range, self.angle_range):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ConfigError("RegimeSpec: sampling ranges must be finite and increasing")
        if self.noise not in ("constant", "linear"):
            raise ConfigError(f"RegimeSpec: unknown noise model {self.noise!r}")
        if self.noise == "constant" and self.noise_std <= 0:
            raise ConfigError("RegimeSpec: noise_std must be > 0")
        if self.noise == "linear" and (self.noise_base <= 0 or self.noise_slope < 0):
            raise ConfigError("RegimeSpec: linear noise needs base > 0 and slope >= 0")


@dataclass
class RegimeGroundTruth:
    lift: np.ndarray
    smooth: np.ndarray
    gate_dir: np.ndarray
    gate_speed: np.ndarray
    noise_std: np.ndarray
    noiseless: np.ndarray
    spec: RegimeSpec


def gen_regime(spec: RegimeSpec):
    """Generate (Dataset with columns U, theta and target y, RegimeGroundTruth)."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    U = rng.uniform(*spec.speed_range, spec.n)
    theta = rng.uniform(*spec.angle_range, spec.n)
    g_dir = _sigmoid(np.cos(2.0 * theta), spec.dir_slope, spec.dir_location)
    g_speed = _sigmoid(U, spec.speed_slope, spec.speed_location)
    lift = g_dir * g_speed * spec.lift_coeff * U * U

    order = np.argsort(U)
    smooth_path = np.empty(spec.n)
    smooth_path[order] = _se_draw(
        rng, U[order], spec.smooth_variance, spec.smooth_lengthscale
    )
    smooth = (1.0 - g_dir) * (1.0 - g_speed) * smooth_path

    noiseless = lift + smooth
    if spec.noise == "constant":
        noise_std = np.full(spec.n, spec.noise_std)
    else:
        noise_std = spec.noise_base + spec.noise_slope * U
    y = noiseless + noise_std * rng.standard_normal(spec.n)
    data = Dataset(["U", "theta"], np.column_stack([U, theta]), y)
    truth = RegimeGroundTruth(lift, smooth, g_dir, g_speed, noise_std, noiseless, spec)
    return data, truth


# ---------------------------------------------------------------------------
# Flight-test style oscillator generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OscillatorSpec:
    """Quasi-static response plus gated damped-oscillator bursts.

    ``modes`` lists (mass, damping ratio, natural frequency rad/s) per
    oscillator; ``mode_stds`` sets each mode's stationary displacement std
    under sustained forcing.  Bursts are driven by white-noise forcing
    gated on a synthetic rudder-angle trajectory through a logistic switch.
    """

    duration: float = 96.0
    rate: float = 128.0
    modes: tuple = ((1.0, 0.02, TWO_PI * 11.0), (1.0, 0.015, TWO_PI * 32.5))
    mode_stds: tuple = (0.5, 0.35)
    gate_slope: float = 3.099
    gate_location: float = 22.59  # degrees
    rudder_base: float = 5.0
    rudder_peak: float = 35.0
    n_bursts: int = 3
    burst_hold: float = 3.0  # seconds at peak rudder
    burst_ramp: float = 0.5  # seconds for each ramp
    window_pad: float = 0.75  # seconds added around each burst for scoring masks
    channel_lengthscales: tuple = (12.0, 18.0, 27.0)
    quasi_weights: tuple = (1.0, -0.7, 0.4)
    noise_std: float = 0.05
    seed: int = 0
    nyquist_margin: float = 3.9

    def validate(self):
        if self.duration <= 0 or self.rate <= 0:
            raise ConfigError("OscillatorSpec: duration and rate must be > 0")
        if len(self.modes) != len(self.mode_stds):
            raise ConfigError("OscillatorSpec: modes and mode_stds lengths differ")
        f_max = 0.0
        for m, zeta, wn in self.modes:
            if not (0.0 < zeta < 1.0):
                raise ConfigError(f"OscillatorSpec: damping ratio {zeta} outside (0, 1)")
            if m <= 0 or wn <= 0:
                raise ConfigError("OscillatorSpec: mass and natural frequency must be > 0")
            f_max = max(f_max, wn / TWO_PI)
        if self.rate < self.nyquist_margin * f_max:
            raise ConfigError(
                f"OscillatorSpec: sample rate {self.rate} Hz below {self.nyquist_margin}x "
                f"the highest mode frequency {f_max:.3g} Hz"
            )
        if self.n_bursts < 1:
            raise ConfigError("OscillatorSpec: need at least one burst")
        if self.noise_std <= 0:
            raise ConfigError("OscillatorSpec: noise_std must be > 0")


@dataclass
class OscillatorGroundTruth:
    quasi_static: np.ndarray
    dynamics: list  # one array per mode
    gate: np.ndarray
    noise_std: np.ndarray
    noiseless: np.ndarray
    train_mask: np.ndarray  # every-second-sample mask
    windows: dict  # name -> boolean mask over samples
    spec: OscillatorSpec


def _burst_profile(t, centers, base, peak, hold, ramp):
    """Rudder-angle trajectory: baseline with smooth trapezoidal pulses."""
    rudd = np.full_like(t, base)
    for c in centers:
        up0, up1 = c - hold / 2 - ramp, c - hold / 2
        dn0, dn1 = c + hold / 2, c + hold / 2 + ramp
        rising = (t >= up0) & (t < up1)
        rudd[rising] += (peak - base) * 0.5 * (1 - np.cos(math.pi * (t[rising] - up0) / ramp))
        rudd[(t >= up1) & (t < dn0)] += peak - base
        falling = (t >= dn0) & (t < dn1)
        rudd[falling] += (peak - base) * 0.5 * (1 + np.cos(math.pi * (t[falling] - dn0) / ramp))
    return rudd


def _simulate_sdof(rng, m, zeta, wn, target_std, gate, dt):
    """Exact zero-order-hold simulation of a damped oscillator driven by
    gated white noise; target_std sets the sustained-forcing displacement std."""
    n = gate.shape[0]
    if target_std == 0.0:
        return np.zeros(n)
    q = target_std ** 2 * 4.0 * m * m * zeta * wn ** 3  # forcing spectral density
    sigma_f = math.sqrt(q / dt)
    A = np.array([[0.0, 1.0], [-wn * wn, -2.0 * zeta * wn]])
    B = np.array([0.0, 1.0 / m])
    Ad = expm(A * dt)
    Bd = np.linalg.solve(A, (Ad - np.eye(2)) @ B)
    force = sigma_f * gate * rng.standard_normal(n)
    out = np.empty(n)
    z = np.zeros(2)
    for k in range(n):
        out[k] = z[0]
        z = Ad @ z + Bd * force[k]
    return out


def gen_oscillator(spec: OscillatorSpec):
    """Generate (Dataset with columns t, ch1..ch3, rudd and target y, truth)."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    dt = 1.0 / spec.rate
    n = int(round(spec.duration * spec.rate))
    t = np.arange(n) * dt

    # Smooth flight channels: coarse SE draws interpolated to the full rate.
    coarse = np.linspace(0.0, spec.duration, max(32, int(spec.duration)))
    channels = []
    for ls in spec.channel_lengthscales:
        path = _se_draw(rng, coarse, 1.0, ls)
        channels.append(CubicSpline(coarse, path)(t))
    wander = CubicSpline(coarse, _se_draw(rng, coarse, 1.0, 10.0))(t)

    centers = [(i + 1) * spec.duration / (spec.n_bursts + 1) for i in range(spec.n_bursts)]
    rudd = _burst_profile(t, centers, spec.rudder_base, spec.rudder_peak,
                          spec.burst_hold, spec.burst_ramp)
    rudd = rudd + wander
    gate = _sigmoid(rudd, spec.gate_slope, spec.gate_location)

    w = spec.quasi_weights
    quasi = w[0] * channels[0] + w[1] * channels[1] + w[2] * channels[2]
    quasi = quasi + 0.25 * channels[0] * channels[1] + 0.01 * rudd

    dynamics = []
    for (m, zeta, wn), s in zip(spec.modes, spec.mode_stds):
        dynamics.append(_simulate_sdof(rng, m, zeta, wn, s, gate, dt))

    noiseless = quasi + sum(dynamics)
    noise_std = np.full(n, spec.noise_std)
    y = noiseless + noise_std * rng.standard_normal(n)

    windows = {}
    for i, c in enumerate(centers, start=1):
        half = spec.burst_hold / 2 + spec.burst_ramp + spec.window_pad
        windows[f"window_{i}"] = (t >= c - half) & (t <= c + half)
    train_mask = np.arange(n) % 2 == 0

    data = Dataset(
        ["t", "ch1", "ch2", "ch3", "rudd"],
        np.column_stack([t, channels[0], channels[1], channels[2], rudd]),
        y,
    )
    truth = OscillatorGroundTruth(
        quasi, dynamics, gate, noise_std, noiseless, train_mask, windows, spec
    )
    return data, truth


# ---------------------------------------------------------------------------
# One-dimensional change-point generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChangePointSpec:
    """Blend of a short- and a long-lengthscale process across one switch."""

    n: int = 240
    x_range: tuple = (0.0, 8.0)
    slope: float = 2.0
    location: float = 4.0
    short_lengthscale: float = 0.4
    long_lengthscale: float = 2.5
    short_variance: float = 1.0
    long_variance: float = 1.0
    noise_std: float = 0.1
    seed: int = 0

    def validate(self):
        if self.n < 10:
            raise ConfigError("ChangePointSpec: n must be >= 10")
        if self.noise_std <= 0:
            raise ConfigError("ChangePointSpec: noise_std must be > 0")


@dataclass
class ChangePointGroundTruth:
    short_part: np.ndarray
    long_part: np.ndarray
    gate: np.ndarray
    noise_std: np.ndarray
    noiseless: np.ndarray
    spec: ChangePointSpec


def gen_changepoint(spec: ChangePointSpec):
    """Generate (Dataset with column x and target y, ChangePointGroundTruth).

    The short-lengthscale process is active left of the switch location and
    the long-lengthscale one right of it, weighted by complementary gates.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    x = np.sort(rng.uniform(*spec.x_range, spec.n))
    g_short = _se_draw(rng, x, spec.short_variance, spec.short_lengthscale)
    g_long = _se_draw(rng, x, spec.long_variance, spec.long_lengthscale)
    w = _sigmoid(x, spec.slope, spec.location)
    short_part = (1.0 - w) * g_short
    long_part = w * g_long
    noiseless = short_part + long_part
    y = noiseless + spec.noise_std * rng.standard_normal(spec.n)
    data = Dataset(["x"], x[:, None], y)
    truth = ChangePointGroundTruth(
        short_part, long_part, w, np.full(spec.n, spec.noise_std), noiseless, spec
    )
    return data, truth
