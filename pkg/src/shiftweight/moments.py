"""Empirical moment estimates: the confusion-operator triple and its kernel analogue."""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .datagen import class_centers, label_masses
from .predictors import gaussian_gram


@dataclass
class MomentEstimates:
    T_hat: np.ndarray       # (d, k)
    p_hat: np.ndarray       # (d,)  source statistic mean
    q_hat: np.ndarray       # (d,)  target statistic mean
    n_est: int
    m: int


@dataclass
class KernelMoments:
    anchors: np.ndarray     # the estimation-split source labels y_i
    K_yy: np.ndarray        # kernel(y_i, y_j)
    G_uu: np.ndarray        # kernel(u(x_i), u(x_j)) over source
    G_ut: np.ndarray        # kernel(u(x_i), u(x'_l)) source x target
    G_tt: np.ndarray        # kernel(u(x'_l), u(x'_j)) over target
    kappa_bar: float
    bandwidth: float
    n_est: int
    m: int


def estimate_categorical_moments(est_split, target_x, g, k):
    """Empirical (T_hat, p_hat, q_hat) from the estimation split and target covariates.

    T_hat averages g(x_i) e_{y_i}^T over the split; p_hat and q_hat average g
    over source and target covariates.
    """
    x, y = est_split
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    target_x = np.asarray(target_x, dtype=float)
    if len(x) == 0 or len(target_x) == 0:
        raise ValueError("empty estimation split or target set")
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"label index outside [0, {k})")
    gs = np.asarray(g(x), dtype=float)
    if gs.ndim == 1:
        gs = gs[:, None]
    n = len(x)
    T_hat = np.zeros((gs.shape[1], k))
    np.add.at(T_hat.T, y, gs)          # column j accumulates g over class-j samples
    T_hat /= n
    p_hat = T_hat.sum(axis=1)          # same empirical average as mean g, row-summed
    gt = np.asarray(g(target_x), dtype=float)
    if gt.ndim == 1:
        gt = gt[:, None]
    q_hat = gt.mean(axis=0)
    return MomentEstimates(T_hat, p_hat, q_hat, n, len(target_x))


def estimate_kernel_moments(est_split, target_x, u, bandwidth=0.9):
    """Gram-block representation of the kernel moments on the sample span.

    The anchors are the estimation-split labels; target points enter only
    through the cross and target Gram blocks.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    x, y = est_split
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    target_x = np.asarray(target_x, dtype=float)
    if len(x) == 0 or len(target_x) == 0:
        raise ValueError("empty estimation split or target set")
    u_src = np.asarray(u(x), dtype=float).reshape(-1)
    u_tgt = np.asarray(u(target_x), dtype=float).reshape(-1)
    return KernelMoments(
        anchors=y,
        K_yy=gaussian_gram(y, y, bandwidth),
        G_uu=gaussian_gram(u_src, u_src, bandwidth),
        G_ut=gaussian_gram(u_src, u_tgt, bandwidth),
        G_tt=gaussian_gram(u_tgt, u_tgt, bandwidth),
        kappa_bar=1.0,
        bandwidth=bandwidth,
        n_est=len(x),
        m=len(target_x),
    )


def population_moments_categorical(cfg):
    """Analytic population moments for the categorical generator.

    Uses the nearest-center one-hot classifier as the statistic; its class-
    conditional confusion probabilities are exact Gaussian interval masses over
    the midpoint decision boundaries, so the returned triple is the exact
    (T_g, p_g, q_g) of that statistic.  Sample counts are 0: nothing was drawn.
    """
    p, q = label_masses(cfg)
    centers = class_centers(cfg)
    k = cfg.num_classes
    order = np.argsort(centers)
    sorted_c = centers[order]
    cuts = 0.5 * (sorted_c[:-1] + sorted_c[1:])
    lo = np.concatenate(([-np.inf], cuts))
    hi = np.concatenate((cuts, [np.inf]))
    M = np.zeros((k, k))
    for pos in range(k):
        i = order[pos]          # class owning this interval of the real line
        zhi = (hi[pos] - centers) / cfg.noise_std
        zlo = (lo[pos] - centers) / cfg.noise_std
        M[i, :] = ndtr(zhi) - ndtr(zlo)
    T = M * p[None, :]
    return MomentEstimates(T, M @ p, M @ q, 0, 0)
