"""Statistic functions g (categorical) and u (regression) trained on source data.

These feed the moment estimators; they are not the final ERM model.  Training is
deterministic: fixed feature construction, zero initialization, full-batch steps.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError


class StatisticFn:
    """Trained statistic; maps covariates (n,) to (n, d) outputs, or (n,) in kernel mode."""

    def __init__(self, mode, output_dim, fn, params=None):
        self.mode = mode
        self.output_dim = output_dim
        self._fn = fn
        self.params = params or {}

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))


# ===================== shared feature machinery =====================

N_CENTERS = 32


def rbf_features(x, centers, scale):
    # Gaussian bumps at fixed centers plus a constant column
    x = np.asarray(x, dtype=float).reshape(-1)
    d2 = (x[:, None] - centers[None, :]) ** 2
    f = np.exp(-d2 / (2.0 * scale * scale))
    return np.concatenate([f, np.ones((len(x), 1))], axis=1)


def feature_plan(x, n_centers=N_CENTERS):
    """Deterministic centers (data quantiles) and length scale for the feature map."""
    x = np.asarray(x, dtype=float).reshape(-1)
    qs = (np.arange(n_centers) + 0.5) / n_centers
    centers = np.quantile(x, qs)
    gaps = np.diff(np.sort(centers))
    scale = 2.0 * (np.median(gaps) if len(gaps) else 0.0)
    scale = max(scale, 1e-8)
    return centers, scale


def _check_classes_present(y, k):
    present = np.bincount(np.asarray(y, dtype=int), minlength=k)
    for c in range(k):
        if present[c] == 0:
            raise ValueError(f"class {c} absent from training data")


def _safe_spd_solve(a, b):
    try:
        return cho_solve(cho_factor(a), b)
    except LinAlgError:
        return np.linalg.lstsq(a, b, rcond=None)[0]


# ===================== categorical statistics =====================

def fit_multinomial_logistic(feats, y, k, sample_weight=None, reg=1e-4,
                             max_iter=500, tol=1e-8):
    """Weighted softmax regression by Nesterov-accelerated full-batch gradient descent.

    The per-sample weights enter the loss as w_i * CE_i averaged over n, so an
    all-ones weight vector runs the identical code path as unweighted training.
    """
    n, p = feats.shape
    y = np.asarray(y, dtype=int)
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0
    # Lipschitz constant of the weighted softmax gradient
    fw = feats * w[:, None]
    smax = float(np.linalg.eigvalsh(feats.T @ fw / n).max())
    step = 1.0 / (0.5 * max(smax, 1e-12) + reg)

    W = np.zeros((p, k))
    V = W.copy()
    t = 1.0
    for _ in range(max_iter):
        logits = feats @ V
        logits -= logits.max(axis=1, keepdims=True)
        ez = np.exp(logits)
        probs = ez / ez.sum(axis=1, keepdims=True)
        grad = feats.T @ ((probs - onehot) * w[:, None]) / n + reg * V
        W_next = V - step * grad
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        V = W_next + (t - 1.0) / t_next * (W_next - W)
        if np.linalg.norm(W_next - W) < tol * max(1.0, np.linalg.norm(W)):
            W = W_next
            break
        W, t = W_next, t_next
    return W


def _softmax_predictor(centers, scale, W):
    def fn(x):
        logits = rbf_features(x, centers, scale) @ W
        logits -= logits.max(axis=1, keepdims=True)
        ez = np.exp(logits)
        return ez / ez.sum(axis=1, keepdims=True)
    return fn


def train_simplex(train, k):
    """Multinomial logistic statistic; outputs on the probability simplex."""
    x, y = train
    _check_classes_present(y, k)
    centers, scale = feature_plan(x)
    W = fit_multinomial_logistic(rbf_features(x, centers, scale), y, k)
    return StatisticFn("Simplex", k, _softmax_predictor(centers, scale, W),
                       params={"centers": centers, "scale": scale, "W": W})


def train_hypercube(train, k):
    """One-hot least-squares statistic; outputs clipped to [-1, 1]^k."""
    x, y = train
    _check_classes_present(y, k)
    centers, scale = feature_plan(x)
    feats = rbf_features(x, centers, scale)
    onehot = np.zeros((len(feats), k))
    onehot[np.arange(len(feats)), np.asarray(y, dtype=int)] = 1.0
    gram = feats.T @ feats
    jitter = 1e-8 * max(float(np.trace(gram)) / gram.shape[0], 1.0)
    W = _safe_spd_solve(gram + jitter * np.eye(gram.shape[0]), feats.T @ onehot)

    def fn(xq):
        return np.clip(rbf_features(xq, centers, scale) @ W, -1.0, 1.0)

    return StatisticFn("HyperCube", k, fn,
                       params={"centers": centers, "scale": scale, "W": W})


# ===================== regression statistic =====================

def gaussian_gram(a, b, bandwidth):
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    d2 = (a[:, None] - b[None, :]) ** 2
    return np.exp(-d2 / (2.0 * bandwidth * bandwidth))


def train_kernel_regressor(train, bandwidth=0.9, ridge=1e-2):
    """Gaussian kernel ridge regression for u, with an unpenalized mean offset.

    Centering y makes the heavy-ridge limit revert to mean(y) instead of 0.
    """
    if bandwidth <= 0 or ridge <= 0:
        raise ValueError("bandwidth and ridge must be positive")
    x, y = train
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(x) == 0:
        raise ValueError("empty training set")
    ybar = float(y.mean())
    K = gaussian_gram(x, x, bandwidth)
    coef = _safe_spd_solve(K + ridge * np.eye(len(x)), y - ybar)

    def fn(xq):
        return gaussian_gram(xq, x, bandwidth) @ coef + ybar

    return StatisticFn("KernelRegressor", 1, fn,
                       params={"x": x, "coef": coef, "bandwidth": bandwidth,
                               "ridge": ridge, "ybar": ybar})
