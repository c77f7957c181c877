"""Finite-sample confidence radii, composite error bounds, and divergence diagnostics."""

import math
from dataclasses import dataclass

import numpy as np

# Natural logs everywhere: the radii come from exponential tail bounds.


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def categorical_radii(d, k, alpha, n, m, delta):
    """Confidence radii (delta_p, delta_q, delta_T) for the categorical moment estimates.

    d is the statistic output dimension, k the number of classes, alpha*n the
    estimation-split size, m the target sample count.  Each radius bounds the
    corresponding estimation error with probability at least 1 - delta.
    """
    _check_delta(delta)
    if alpha * n <= 0 or m <= 0:
        raise ValueError("sample counts must be positive")
    an = alpha * n
    delta_p = math.sqrt(d / an * math.log(2.0 * d / delta))
    delta_q = math.sqrt(d / m * math.log(2.0 * d / delta))
    delta_T = 2.0 * math.sqrt(2.0 * d / an * math.log(2.0 * (d + k) / delta))
    return delta_p, delta_q, delta_T


def functional_radii(alpha, n, m, delta, kappa_bar=1.0):
    """Confidence radii (delta_p, delta_q, delta_T) for the kernel moment estimates.

    kappa_bar is the kernel sup value (1 for the Gaussian kernel used here).
    delta_p and delta_T share one formula; only the target radius sees m.
    """
    _check_delta(delta)
    if alpha * n <= 0 or m <= 0:
        raise ValueError("sample counts must be positive")
    if kappa_bar < 0:
        raise ValueError("kappa_bar must be nonnegative")
    an = alpha * n
    delta_p = 2.0 * kappa_bar * math.sqrt(2.0 / an * math.log(2.0 / delta))
    delta_q = 2.0 * kappa_bar * math.sqrt(2.0 / m * math.log(2.0 / delta))
    delta_T = 2.0 * kappa_bar * math.sqrt(2.0 / an * math.log(2.0 / delta))
    return delta_p, delta_q, delta_T


def composite_epsilon(radii, proxy_inv_norm, theta_max, path="categorical"):
    """Composite high-probability bound on ||theta_hat - theta||.

    radii must be the three confidence radii evaluated at delta/3 (the union
    bound over the three moment events).  With those inputs the single formula
    2 * ||T^-1|| * (delta_q + delta_p + theta_max * delta_T) reproduces both
    published bound shapes: the functional radii carry an internal factor 2, so
    this equals the prefactor-4 form of the normed-label-space bound.
    """
    if path not in ("categorical", "functional"):
        raise ValueError(f"unknown path {path!r}")
    delta_p, delta_q, delta_T = radii
    if min(delta_p, delta_q, delta_T) < 0:
        raise ValueError("radii must be nonnegative")
    return 2.0 * proxy_inv_norm * (delta_q + delta_p + theta_max * delta_T)


@dataclass(frozen=True)
class ConfidenceReport:
    delta_p: float          # radii at delta/3, the values epsilon_delta is built from
    delta_q: float
    delta_T: float
    epsilon_delta: float
    delta: float
    inputs: dict            # echo of (path, d, k, alpha, n, m, kappa_bar, theta_max, proxy)


def confidence_report(path, alpha, n, m, delta, proxy_inv_norm, theta_max,
                      d=None, k=None, kappa_bar=1.0):
    """Assemble the per-run ConfidenceReport; radii are evaluated at delta/3."""
    _check_delta(delta)
    if path == "categorical":
        if d is None or k is None:
            raise ValueError("categorical path needs d and k")
        radii = categorical_radii(d, k, alpha, n, m, delta / 3.0)
    elif path == "functional":
        radii = functional_radii(alpha, n, m, delta / 3.0, kappa_bar)
    else:
        raise ValueError(f"unknown path {path!r}")
    eps = composite_epsilon(radii, proxy_inv_norm, theta_max, path)
    echo = {"path": path, "d": d, "k": k, "alpha": alpha, "n": n, "m": m,
            "kappa_bar": kappa_bar, "theta_max": theta_max,
            "proxy_inv_norm": proxy_inv_norm}
    return ConfidenceReport(radii[0], radii[1], radii[2], eps, delta, echo)


def divergence_report(omega, p_source, grid_points=2001):
    """Divergence diagnostics (d_inf, d_second) of a weight against the source marginal.

    Categorical: omega and p_source are vectors, d_inf = max omega and
    d_second = sum_i p_i * omega_i^2.  Continuous: omega and p_source are
    callables on [0, 1]; the sup and the second moment are taken on a fine grid.
    Validates omega >= 0 and E_P[omega] = 1 within 1e-6.
    """
    if callable(omega):
        ys = np.linspace(0.0, 1.0, grid_points)
        w = np.asarray(omega(ys), dtype=float)
        p = np.asarray(p_source(ys), dtype=float)
        if w.min() < 0:
            raise ValueError("weight function must be nonnegative")
        mass = float(np.trapezoid(w * p, ys))
        if abs(mass - 1.0) > 1e-6:
            raise ValueError(f"E_P[omega] = {mass}, expected 1")
        d_inf = float(w.max())
        d_second = float(np.trapezoid(w * w * p, ys))
    else:
        w = np.asarray(omega, dtype=float)
        p = np.asarray(p_source, dtype=float)
        if w.min() < 0:
            raise ValueError("weight vector must be nonnegative")
        mass = float(p @ w)
        if abs(mass - 1.0) > 1e-6:
            raise ValueError(f"E_P[omega] = {mass}, expected 1")
        d_inf = float(w.max())
        d_second = float(p @ (w * w))
    return d_inf, d_second
