"""Scalar effective problems behind the equations of state.

Each feature class reduces, in the high-dimensional limit, to a random
one-dimensional penalized quadratic whose minimizer is a soft threshold.
These maps are the building blocks of both the deterministic expectation
engine and the Monte Carlo oracle.
"""

from __future__ import annotations

import numpy as np

__all__ = ["soft_threshold", "stage1_scalar", "stage2_scalar"]


def soft_threshold(h, threshold):
    return np.sign(h) * np.maximum(np.abs(h) - threshold, 0.0)


def stage1_scalar(q1_hat, chi1_hat, m1_hat_k, lambda1, z1, xstar):
    """Minimizer of (q1_hat/2) x^2 - (sqrt(chi1_hat) z1 + m1_hat_k xstar) x + lambda1 |x|.

    The negative-set variant is recovered by passing ``m1_hat_k = 0``.
    """
    if q1_hat <= 0:
        raise ValueError(f"q1_hat must be positive, got {q1_hat}")
    if chi1_hat < 0:
        raise ValueError(f"chi1_hat must be non-negative, got {chi1_hat}")
    field = np.sqrt(chi1_hat) * np.asarray(z1) + m1_hat_k * np.asarray(xstar)
    return soft_threshold(field, lambda1) / q1_hat


def stage2_scalar(
    q2_hat,
    chi2_hat,
    m2_hat_k,
    qr_hat,
    lambda2,
    dlambda,
    z2,
    xstar,
    x1,
):
    """Minimizer of the second-stage scalar problem given the first-stage draw.

    The penalty is ``lambda2`` where ``x1 != 0`` and ``lambda2 + dlambda``
    where ``x1 == 0``; an infinite ``dlambda`` forces the off-support
    minimizer to zero exactly.
    """
    if q2_hat <= 0:
        raise ValueError(f"q2_hat must be positive, got {q2_hat}")
    if chi2_hat < 0:
        raise ValueError(f"chi2_hat must be non-negative, got {chi2_hat}")
    z2 = np.asarray(z2, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    field = np.sqrt(chi2_hat) * z2 + m2_hat_k * np.asarray(xstar) + qr_hat * x1
    off = x1 == 0.0
    if np.isinf(dlambda):
        out = soft_threshold(field, lambda2) / q2_hat
        return np.where(off, 0.0, out)
    thr = np.where(off, lambda2 + dlambda, lambda2)
    return soft_threshold(field, thr) / q2_hat
