"""RKHS estimators for the continuous-label shift function, solved on the anchor span.

The unknown is represented as theta(y) = sum_j beta_j kernel(y_j, y) over the
estimation-split source labels (the anchors).  All norms and operator actions
reduce to Gram-block arithmetic in that span.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh

from .errors import IllConditioned, SingularOperator
from .predictors import gaussian_gram

EIG_TOL = 1e-10             # relative spectral cutoff for the direct inverse


@dataclass
class FunctionalWeightEstimate:
    beta: np.ndarray        # representer coefficients over the anchors
    anchors: np.ndarray
    method: str             # "E3" or "E4"
    lambda_used: float
    rkhs_norm: float        # sqrt(beta^T K_yy beta)
    bandwidth: float
    diagnostics: dict


def _normal_system(km):
    # A beta are the source-image coefficients of T_hat theta; the right-hand
    # side collects the cross terms of the squared residual
    N = km.n_est
    A = km.K_yy / N
    S = A @ km.G_uu @ A
    rhs = A @ (km.G_ut.sum(axis=1) / km.m - km.G_uu.sum(axis=1) / N)
    return A, S, rhs


def residual_norm_sq(km, beta):
    """||T_hat theta - q_hat + p_hat||^2 in the RKHS, via Gram blocks."""
    N, m = km.n_est, km.m
    A = km.K_yy / N
    c = A @ beta + np.full(N, 1.0 / N)
    tt = float(km.G_tt.sum()) / (m * m)
    return float(c @ km.G_uu @ c) - 2.0 / m * float(c @ km.G_ut.sum(axis=1)) + tt


def e4_objective(km, lam, beta):
    """The squared relaxed objective J(beta) = residual^2 + lam * ||theta||_H^2."""
    return residual_norm_sq(km, beta) + lam * float(beta @ km.K_yy @ beta)


def e4_regularized(km, lam):
    """Ridge-regularized estimate on the anchor span; lam equal to the operator
    confidence radius gives the default high-probability estimator, other lam
    values are the general-regularization variant."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    _, S, rhs = _normal_system(km)
    M = S + lam * km.K_yy
    trace = float(np.trace(M))
    beta = None
    jitter_used = None
    for jitter in (1e-12, 1e-8 * max(trace, 1.0)):
        try:
            c, low = cho_factor(M + jitter * np.eye(len(M)), lower=True)
            beta = cho_solve((c, low), rhs)
            jitter_used = jitter
            break
        except LinAlgError:
            continue
    if beta is None or not np.all(np.isfinite(beta)):
        raise IllConditioned("normal equations unsolvable after jitter escalation")
    rn = math.sqrt(max(float(beta @ km.K_yy @ beta), 0.0))
    diag = {
        "jitter": jitter_used,
        "residual_sq": residual_norm_sq(km, beta),
        "objective": e4_objective(km, lam, beta),
    }
    return FunctionalWeightEstimate(beta, km.anchors, "E4", float(lam), rn,
                                    km.bandwidth, diag)


def e3_direct(km):
    """Direct estimate: spectral-truncated pseudo-inverse of the span-restricted
    operator (eigenvalues below EIG_TOL times the largest are discarded)."""
    _, S, rhs = _normal_system(km)
    w, V = eigh(S)
    wmax = float(w[-1]) if len(w) else 0.0
    keep = w > EIG_TOL * max(wmax, 0.0)
    if wmax <= 0 or not np.any(keep):
        raise SingularOperator("operator spectrum entirely below threshold",
                               spectrum=w)
    Vk = V[:, keep]
    beta = Vk @ ((Vk.T @ rhs) / w[keep])
    rn = math.sqrt(max(float(beta @ km.K_yy @ beta), 0.0))
    diag = {
        "condition_number": wmax / float(w[keep].min()),
        "spectrum_max": wmax,
        "spectrum_min_kept": float(w[keep].min()),
        "rank_kept": int(keep.sum()),
        "residual_sq": residual_norm_sq(km, beta),
    }
    return FunctionalWeightEstimate(beta, km.anchors, "E3", 0.0, rn,
                                    km.bandwidth, diag)


def theta_function(est):
    """The estimated shift function theta_hat as a callable on label values."""
    def theta(ys):
        K = gaussian_gram(ys, est.anchors, est.bandwidth)
        return K @ est.beta
    return theta


def evaluate_weight(est, gamma, ys):
    """Blended weight values 1 + gamma * theta_hat(y) at the given labels."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if len(est.anchors) == 0:
        raise ValueError("estimate has no anchors")
    return 1.0 + gamma * theta_function(est)(np.asarray(ys, dtype=float))


def operator_inverse_norm_proxy(km, max_anchors=512):
    """Proxy for the inverse-operator norm on the resolvable span.

    Smallest retained generalized eigenvalue of (S, K_yy) gives the squared
    smallest singular value of the span-restricted operator; the proxy is its
    inverse square root.  Large systems are strided down to max_anchors first,
    which keeps this diagnostic (it has no unbiased estimator anyway) cheap.
    """
    N = km.n_est
    idx = np.arange(N)
    if N > max_anchors:
        idx = np.unique(np.round(np.linspace(0, N - 1, max_anchors)).astype(int))
    K = km.K_yy[np.ix_(idx, idx)]
    G = km.G_uu[np.ix_(idx, idx)]
    Ns = len(idx)
    A = K / Ns
    S = A @ G @ A
    jitter = 1e-10 * max(float(np.trace(K)) / Ns, 1.0)
    vals = eigh(S, K + jitter * np.eye(Ns), eigvals_only=True)
    vmax = float(vals[-1]) if len(vals) else 0.0
    kept = vals[vals > EIG_TOL * max(vmax, 0.0)]
    if vmax <= 0 or len(kept) == 0:
        return float("inf")
    return 1.0 / math.sqrt(float(kept.min()))


def check_burn_in_functional(n, alpha, delta, kappa_bar, op_inv_norm_proxy):
    """True iff n meets the direct-estimator sample threshold for the kernel path."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    required = (32.0 / alpha) * op_inv_norm_proxy ** 2 * kappa_bar ** 2 \
        * math.log(6.0 / delta)
    return n >= required
