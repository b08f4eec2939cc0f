"""Prediction scoring: normalised mean squared error and standardised log loss.

NMSE is reported in percent and normalised so that predicting the dataset
mean scores exactly 100.  MSLL subtracts the log density of a trivial
Gaussian fitted to the training targets, so the trivial predictor scores
exactly 0 and lower is better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

LOG_2PI = math.log(2.0 * math.pi)


def _check_pair(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise DataError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size < 2:
        raise DataError("need at least 2 points")
    if not (np.all(np.isfinite(y_true)) and np.all(np.isfinite(y_pred))):
        raise DataError("non-finite values in inputs")
    return y_true, y_pred


def nmse(y_true, y_pred) -> float:
    """100 * SSE / (N * var(y_true)), population variance."""
    y_true, y_pred = _check_pair(y_true, y_pred)
    var = float(np.var(y_true))
    if var <= 0:
        raise DataError("targets have zero variance; NMSE undefined")
    return float(100.0 * np.mean((y_true - y_pred) ** 2) / var)


def _gauss_logpdf(y, mean, var):
    return -0.5 * (LOG_2PI + np.log(var) + (y - mean) ** 2 / var)


def msll(y_true, pred_mean, pred_var, train_mean, train_var) -> float:
    """Mean standardised log loss in nats.

    Average of -log N(y_i; mu_i, v_i) + log N(y_i; train_mean, train_var).
    """
    y_true = np.asarray(y_true, dtype=float).ravel()
    pred_mean = np.asarray(pred_mean, dtype=float).ravel()
    pred_var = np.asarray(pred_var, dtype=float).ravel()
    if not (y_true.shape == pred_mean.shape == pred_var.shape):
        raise DataError("y_true, pred_mean, pred_var must have equal lengths")
    if np.any(pred_var <= 0):
        raise ConfigError("predictive variances must be > 0")
    if train_var <= 0:
        raise ConfigError("training variance must be > 0")
    model = _gauss_logpdf(y_true, pred_mean, pred_var)
    trivial = _gauss_logpdf(y_true, float(train_mean), float(train_var))
    return float(np.mean(trivial - model))


@dataclass
class ScoreReport:
    """Overall and per-region NMSE (percent) / MSLL (nats).

    Regional NMSE is normalised by the regional target variance; the
    ``nmse_normalization`` field records that convention.
    """

    nmse: float
    msll: float
    n: int
    regions: dict = field(default_factory=dict)
    nmse_normalization: str = "regional"

    def to_dict(self):
        return {
            "nmse_percent": self.nmse,
            "msll": self.msll,
            "n": self.n,
            "nmse_normalization": self.nmse_normalization,
            "regions": self.regions,
        }


def score_predictions(
    y_true, pred_mean, pred_var, train_mean, train_var, regions=None
) -> ScoreReport:
    """Score predictions overall and over named index masks."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    report = ScoreReport(
        nmse=nmse(y_true, pred_mean),
        msll=msll(y_true, pred_mean, pred_var, train_mean, train_var),
        n=int(y_true.size),
    )
    pred_mean = np.asarray(pred_mean, dtype=float).ravel()
    pred_var = np.asarray(pred_var, dtype=float).ravel()
    for name, idx in (regions or {}).items():
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        if idx.size < 2:
            raise DataError(f"region {name!r} needs at least 2 points")
        report.regions[name] = {
            "nmse_percent": nmse(y_true[idx], pred_mean[idx]),
            "msll": msll(y_true[idx], pred_mean[idx], pred_var[idx], train_mean, train_var),
            "n": int(idx.size),
        }
    return report
