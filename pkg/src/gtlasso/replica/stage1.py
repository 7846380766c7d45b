"""Equations of state for the pretraining stage.

The update map alternates the conjugate ("hat") equations, which are
rational in the order parameters, with the Gaussian expectations of the
scalar minimizer.  On each feature block the field sqrt(chi1_hat) z +
m1_hat xstar is a centered Gaussian of variance chi1_hat + m1_hat^2, so
every expectation reduces to Gaussian tail integrals:

    E[x1^2]                 = E[ST(h, lambda1)^2] / q1_hat^2
    E[x1 xstar]             = m1_hat * P(|h| > lambda1) / q1_hat
    E[d x1 / d(sqrt(chi1_hat) z)] = P(|h| > lambda1) / q1_hat
"""

from __future__ import annotations

import numpy as np

from ..core import ProblemGeometry, negative_fraction, rho
from .fixedpoint import damped_fixed_point
from .moments import field_quadrature, soft_gauss_moments
from .scalar import soft_threshold, stage1_scalar
from .state import FixedPointInfo, SolveOptions, Theta1

__all__ = [
    "lambda_inf_theta1",
    "stage1_block_moments",
    "stage1_block_moments_mc",
    "stage1_rhs",
    "solve_stage1",
    "eps1",
]


def stage1_mismatch(q1: float, m1: np.ndarray, geometry: ProblemGeometry) -> float:
    """sum_k alpha_k [q1 - 2(m1_0 + m1_k) + rho_k], the pooled test mismatch."""
    total = 0.0
    for k in range(1, geometry.num_classes + 1):
        total += geometry.alpha[k - 1] * (
            q1 - 2.0 * (m1[0] + m1[k]) + rho(geometry, k)
        )
    return total


def eps1(theta1: Theta1, geometry: ProblemGeometry) -> float:
    """Asymptotic first-stage generalization error."""
    return stage1_mismatch(theta1.q1, theta1.m1, geometry)


def lambda_inf_theta1(geometry: ProblemGeometry) -> Theta1:
    """Closed-form fixed point in the all-zero-estimator limit lambda1 -> inf."""
    k1 = geometry.num_classes + 1
    m1 = np.zeros(k1)
    m1_hat = np.empty(k1)
    m1_hat[0] = geometry.alpha_total
    m1_hat[1:] = geometry.alpha
    chi1_hat = stage1_mismatch(0.0, m1, geometry)
    return Theta1(
        m1=m1,
        m1_hat=m1_hat,
        q1=0.0,
        q1_hat=geometry.alpha_total,
        chi1=0.0,
        chi1_hat=chi1_hat,
    )


def stage1_block_moments(q1_hat, chi1_hat, m1_hat_b, lambda1):
    """Closed-form (E[x1^2], E[x1 xstar], P(active)) on one feature block."""
    var = chi1_hat + m1_hat_b**2
    p, _, e2 = soft_gauss_moments(0.0, np.sqrt(var), lambda1)
    p = float(p)
    e2 = float(e2)
    return e2 / q1_hat**2, m1_hat_b * p / q1_hat, p


def stage1_block_moments_quad(q1_hat, chi1_hat, m1_hat_b, lambda1, n_core=64, n_tail=40):
    """Same moments by explicit field quadrature (cross-check engine)."""
    var = chi1_hat + m1_hat_b**2
    h, w = field_quadrature(var, lambda1, n_core, n_tail)
    x1 = soft_threshold(h, lambda1) / q1_hat
    active = (np.abs(h) > lambda1).astype(float)
    ex2 = float(w @ (x1 * x1))
    # E[x1 xstar] via the conditional mean of xstar given the field.
    mustar = (m1_hat_b / var) * h if var > 0 else np.zeros_like(h)
    exx = float(w @ (x1 * mustar))
    pact = float(w @ active)
    return ex2, exx, pact


def stage1_block_moments_mc(q1_hat, chi1_hat, m1_hat_b, lambda1, n_samples, rng):
    z = rng.standard_normal(n_samples)
    xstar = rng.standard_normal(n_samples)
    x1 = stage1_scalar(q1_hat, chi1_hat, m1_hat_b, lambda1, z, xstar)
    active = x1 != 0.0
    return (
        float(np.mean(x1 * x1)),
        float(np.mean(x1 * xstar)),
        float(np.mean(active)),
    )


def _stage1_expectations(q1_hat, chi1_hat, m1_hat, lambda1, geometry, options):
    """Aggregate block moments into (q1, m1 vector, chi1)."""
    k1 = geometry.num_classes + 1
    fractions = np.empty(k1 + 1)
    fractions[0] = geometry.pi0
    fractions[1:k1] = geometry.pi
    fractions[k1] = negative_fraction(geometry)

    mc = options.expectation == "mc"
    rng = (
        np.random.Generator(np.random.Philox(np.random.SeedSequence(options.mc_seed)))
        if mc
        else None
    )

    q1 = 0.0
    chi1_acc = 0.0
    m1 = np.zeros(k1)
    for b in range(k1 + 1):
        mhat_b = m1_hat[b] if b < k1 else 0.0
        if mc:
            ex2, exx, pact = stage1_block_moments_mc(
                q1_hat, chi1_hat, mhat_b, lambda1, options.mc_samples, rng
            )
        else:
            ex2, exx, pact = stage1_block_moments(q1_hat, chi1_hat, mhat_b, lambda1)
        q1 += fractions[b] * ex2
        chi1_acc += fractions[b] * pact
        if b < k1:
            m1[b] = fractions[b] * exx
    chi1 = chi1_acc / q1_hat
    return q1, m1, chi1


def stage1_rhs(
    theta: Theta1,
    geometry: ProblemGeometry,
    lambda1: float,
    options: SolveOptions | None = None,
) -> Theta1:
    """One application of the stage-1 update map (hats, then expectations)."""
    options = options or SolveOptions()
    k1 = geometry.num_classes + 1

    denom = 1.0 + theta.chi1
    q1_hat = geometry.alpha_total / denom
    m1_hat = np.empty(k1)
    m1_hat[0] = q1_hat
    m1_hat[1:] = np.asarray(geometry.alpha) / denom
    chi1_hat = max(stage1_mismatch(theta.q1, theta.m1, geometry), 0.0) / denom**2

    q1, m1, chi1 = _stage1_expectations(
        q1_hat, chi1_hat, m1_hat, lambda1, geometry, options
    )
    return Theta1(
        m1=m1, m1_hat=m1_hat, q1=q1, q1_hat=q1_hat, chi1=chi1, chi1_hat=chi1_hat
    )


def solve_stage1(
    geometry: ProblemGeometry,
    lambda1: float,
    options: SolveOptions | None = None,
    init: Theta1 | None = None,
) -> tuple[Theta1, FixedPointInfo]:
    """Solve the stage-1 equations of state by damped fixed-point iteration."""
    if lambda1 <= 0:
        raise ValueError("lambda1 must be positive")
    options = options or SolveOptions()
    theta0 = init if init is not None else lambda_inf_theta1(geometry)
    k = geometry.num_classes

    def rhs_vec(v):
        theta = Theta1.from_vector(v, k)
        return stage1_rhs(theta, geometry, lambda1, options).to_vector()

    x, iters, res, gamma = damped_fixed_point(
        theta0.to_vector(),
        rhs_vec,
        tolerance=options.tolerance,
        max_iters=options.max_iters,
        damping=options.damping,
    )
    theta = Theta1.from_vector(x, k)
    info = FixedPointInfo(
        iterations=iters, residual=res, converged=True, damping_final=gamma
    )
    return theta, info
