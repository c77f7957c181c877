"""Importance-weighted empirical risk minimization and oracle target evaluation.

Reported risks always use bounded losses: 0-1 loss for classification, squared
error clipped to [0, 1] for regression.  The training surrogates are weighted
cross-entropy and weighted squared loss.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .predictors import (feature_plan, fit_multinomial_logistic, gaussian_gram,
                         rbf_features, _safe_spd_solve)

logger = logging.getLogger("shiftweight")


class FittedModel:
    """Minimal trained predictor: class labels for logistic, reals for kernel ridge."""

    def __init__(self, family, fn):
        self.family = family
        self._fn = fn

    def predict(self, x):
        return self._fn(np.asarray(x, dtype=float))


@dataclass
class WeightedERMResult:
    model: FittedModel
    gamma: float            # recorded blend used to build the weights, if known
    train_weighted_risk: float
    target_risk: float = None


def blend_gamma(theta_hat, gamma):
    """Per-label weights 1 + gamma * theta_hat for the categorical path."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    return 1.0 + gamma * np.asarray(theta_hat, dtype=float)


def _per_sample_weights(omega, y):
    if callable(omega):
        w = np.asarray(omega(y), dtype=float)
    else:
        w = np.asarray(omega, dtype=float)[np.asarray(y, dtype=int)]
    neg = w < 0
    if np.any(neg):
        # negative estimates make the surrogate unbounded below; the stored
        # estimate stays unclamped, only the ERM copy is floored
        logger.warning("clamped %d negative importance weights to 0 for ERM",
                       int(neg.sum()))
        w = np.where(neg, 0.0, w)
    if not np.all(np.isfinite(w)):
        raise ValueError("importance weights must be finite")
    if w.max() == 0.0:
        raise ValueError("all importance weights are zero")
    return w


def weighted_erm(erm_split, omega, family="logistic", k=None, gamma=None,
                 bandwidth=0.9, ridge=1e-2):
    """Minimize the weighted surrogate over the chosen family.

    omega is either a length-k weight vector indexed by class label or a
    callable evaluated at the (continuous) labels.  gamma = 0 weights are all
    ones and run the identical code path as unweighted training.
    """
    x, y = erm_split
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise ValueError("empty ERM split")
    w = _per_sample_weights(omega, y)

    if family == "logistic":
        y = np.asarray(y, dtype=int)
        if k is None:
            k = int(y.max()) + 1
        centers, scale = feature_plan(x)
        feats = rbf_features(x, centers, scale)
        W = fit_multinomial_logistic(feats, y, k, sample_weight=w)

        def fn(xq):
            return np.argmax(rbf_features(xq, centers, scale) @ W, axis=1)

        model = FittedModel("logistic", fn)
        risk = float(np.mean(w * (fn(x) != y)))
    elif family == "kernel_ridge":
        y = np.asarray(y, dtype=float)
        sw = np.sqrt(w)
        ybar = float((w * y).sum() / w.sum())
        K = gaussian_gram(x, x, bandwidth)
        # symmetric weighted system: (S K S + ridge I) gam = S (y - ybar), coef = S gam
        M = (sw[:, None] * K) * sw[None, :] + ridge * np.eye(len(x))
        gam = _safe_spd_solve(M, sw * (y - ybar))
        coef = sw * gam

        def fn(xq):
            return gaussian_gram(xq, x, bandwidth) @ coef + ybar

        model = FittedModel("kernel_ridge", fn)
        risk = float(np.mean(w * np.clip((fn(x) - y) ** 2, 0.0, 1.0)))
    else:
        raise ValueError(f"unknown family {family!r}")

    return WeightedERMResult(model, gamma, risk)


def oracle_target_risk(model, target_x, target_y):
    """Mean bounded loss of the model on held-out labeled target samples."""
    target_x = np.asarray(target_x, dtype=float)
    if len(target_x) == 0:
        raise ValueError("empty oracle target set")
    pred = model.predict(target_x)
    if model.family == "logistic":
        return float(np.mean(pred != np.asarray(target_y, dtype=int)))
    err = (pred - np.asarray(target_y, dtype=float)) ** 2
    return float(np.mean(np.clip(err, 0.0, 1.0)))


def choose_gamma(epsilon_delta, theta_max):
    """Pick gamma in {0, 1} minimizing gamma*eps + (1-gamma)*theta_max.

    Ties go to 1 (the shift-aware choice)."""
    return 1.0 if epsilon_delta <= theta_max else 0.0
