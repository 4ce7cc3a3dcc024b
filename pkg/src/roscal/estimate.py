"""Empirical moment estimation and finite-sample accuracy factors.

The covariance estimate is the 1/n-normalized scatter (not 1/(n-1)); the
whole calibration pipeline is defined against that convention.  The
``eta`` factor quantifies the relative accuracy of the covariance estimate
and feeds the (1 +- eta) inflation factors of the calibration algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputValidationError
from .numerics import chi_quantile

#: one-dimensional Berry-Esseen-type constant (the d-dependent constant
#: 400 * d^(1/4) evaluated at d = 1); tighter published values exist but are
#: not chased here.
C1 = 400.0

__all__ = ["C1", "EmpiricalEstimate", "empirical_moments", "eta", "covariance_sandwich"]


@dataclass(frozen=True, eq=False)
class EmpiricalEstimate:
    """Sample mean, 1/n covariance, and plug-in higher-moment bounds.

    ``tau`` bounds the third moment of the whitened errors, ``tau_prime``
    the sixth; both may be zero in the practical calibration mode.
    """

    theta_hat: np.ndarray
    sigma_hat: np.ndarray
    n: int
    tau: float
    tau_prime: float


def empirical_moments(samples, bounds=None) -> EmpiricalEstimate:
    """Mean and 1/n-normalized scatter of the sample rows.

    When ``bounds`` is absent, tau and tau_prime are plug-in estimates
    from whitened samples, inflated by 1.2 to hedge plug-in bias.
    Zero-variance (dummy) coordinates are excluded from whitening.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise InputValidationError("empirical_moments: need at least two samples")
    theta_hat = X.mean(axis=0)
    centered = X - theta_hat
    sigma_hat = (centered.T @ centered) / n
    sigma_hat = 0.5 * (sigma_hat + sigma_hat.T)
    if bounds is not None:
        tau, tau_prime = float(bounds[0]), float(bounds[1])
        if tau < 0 or tau_prime < 0:
            raise InputValidationError("empirical_moments: moment bounds must be >= 0")
    else:
        # Whiten through the pseudo-inverse square root of sigma_hat.
        w, Q = np.linalg.eigh(sigma_hat)
        w = np.clip(w, 0.0, None)
        tol = 1e-12 * max(float(np.trace(sigma_hat)), 1e-300)
        inv_sqrt = np.where(w > tol, 1.0 / np.sqrt(np.maximum(w, tol)), 0.0)
        W = (Q * inv_sqrt) @ Q.T
        delta = centered @ W.T
        tau = 1.2 * float(np.mean(np.linalg.norm(delta, axis=1) ** 3))
        tau_prime = 1.2 * float(np.max(np.mean(delta**6, axis=0)))
    return EmpiricalEstimate(
        theta_hat=theta_hat, sigma_hat=sigma_hat, n=n, tau=tau, tau_prime=tau_prime
    )


def eta(d: int, n: int, delta_prime: float, tau_prime: float) -> float:
    """Relative covariance accuracy factor.

    ``(tau'^(1/3) d / sqrt(n)) * chi_1^{-1}(1 - delta'/d^2 + c1 tau'/sqrt(n))``.
    Returns +inf when the quantile argument reaches 1 (the bound is vacuous
    at that sample size), and 0 when ``tau_prime`` is 0.
    """
    if d < 1 or n < 1:
        raise InputValidationError("eta: d and n must be positive")
    if tau_prime == 0.0:
        return 0.0
    arg = 1.0 - delta_prime / d**2 + C1 * tau_prime / math.sqrt(n)
    if arg >= 1.0:
        return float("inf")
    arg = max(arg, 0.0)
    return (tau_prime ** (1.0 / 3.0) * d / math.sqrt(n)) * chi_quantile(1, arg)


def covariance_sandwich(estimate, eta_val: float):
    """Scalar deflation/inflation factors (1 - eta, 1 + eta) used to bound
    the true covariance by the estimate; the lower factor is floored at
    1e-6 once eta reaches 1."""
    if eta_val < 0:
        raise InputValidationError("covariance_sandwich: eta must be nonnegative")
    return max(1.0 - eta_val, 1e-6), 1.0 + eta_val
