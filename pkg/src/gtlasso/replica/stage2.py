"""Equations of state for the fine-tuning stage.

The second-stage expectations run over (z1, z2, xstar) with z2
conditionally Gaussian given z1.  Conditioning on the first-stage field
h = sqrt(chi1_hat) z1 + m1_hat xstar makes everything else Gaussian in
closed form, so the deterministic engine only integrates over h with a
piecewise rule split at the soft-threshold kink +-lambda1:

    field2 | h  ~  N(a0(h), s2^2),
    a0 = (chir_hat/chi1_hat) h + (m2_hat - chir_hat m1_hat / chi1_hat) mustar(h)
         + qr_hat x1(h),
    s2^2 = chi2_hat - chir_hat^2/chi1_hat
           + (m2_hat - chir_hat m1_hat / chi1_hat)^2 Var(xstar | h),

and the soft-threshold moments of a Gaussian field are analytic.  A Monte
Carlo engine with the same contract is kept as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Hyperparams, ProblemGeometry, negative_fraction, rho
from .fixedpoint import damped_fixed_point
from .moments import field_quadrature, soft_gauss_moments
from .scalar import soft_threshold, stage2_scalar
from .state import FixedPointInfo, SolveOptions, Theta1, Theta2

__all__ = [
    "make_stage2_nodes",
    "stage2_hats",
    "stage2_rhs",
    "solve_stage2",
    "zero_theta2",
    "eps2",
    "order_params",
]


@dataclass(frozen=True)
class _BlockNodes:
    """Per-block quantities that stay fixed while Theta2 iterates."""

    fraction: float
    m1_hat: float
    signal: bool  # block k in {0, 1}: direct signal channel from the target
    has_xstar: bool
    h: np.ndarray
    w: np.ndarray
    x1: np.ndarray
    active1: np.ndarray
    mustar: np.ndarray
    var_star: float  # Var(xstar | h)
    var_field: float  # Var(h) = chi1_hat + m1_hat^2


def make_stage2_nodes(
    theta1: Theta1,
    geometry: ProblemGeometry,
    lambda1: float,
    options: SolveOptions,
) -> list[_BlockNodes]:
    k1 = geometry.num_classes + 1
    fractions = [geometry.pi0, *geometry.pi, negative_fraction(geometry)]
    blocks = []
    for b in range(k1 + 1):
        is_neg = b == k1
        m1h = 0.0 if is_neg else float(theta1.m1_hat[b])
        var = theta1.chi1_hat + m1h**2
        h, w = field_quadrature(var, lambda1, options.quad_core, options.quad_tail)
        x1 = soft_threshold(h, lambda1) / theta1.q1_hat
        active1 = (np.abs(h) > lambda1).astype(float)
        if var > 0 and not is_neg:
            mustar = (m1h / var) * h
            var_star = 1.0 - m1h**2 / var
        else:
            mustar = np.zeros_like(h)
            var_star = 0.0 if is_neg else 1.0
        blocks.append(
            _BlockNodes(
                fraction=float(fractions[b]),
                m1_hat=m1h,
                signal=(b in (0, 1)),
                has_xstar=not is_neg,
                h=h,
                w=w,
                x1=x1,
                active1=active1,
                mustar=mustar,
                var_star=var_star,
                var_field=var,
            )
        )
    return blocks


def stage2_hats(
    theta2: Theta2,
    theta1: Theta1,
    geometry: ProblemGeometry,
    hyper: Hyperparams,
) -> tuple[dict, bool]:
    """Conjugate equations of the second stage; returns (hats, clipped)."""
    alpha1 = geometry.alpha[0]
    rho1 = rho(geometry, 1)
    chi1 = theta1.chi1
    # Both stages see dataset 1, so the effective second-stage residual is
    # R = B*H - A*h1 - h2 with A = (kappa - chi_r)/(1 + chi1); the cross
    # conjugate chir_hat is the covariance of the rescaled training
    # residuals of the two stages, E[(H - h1) R] / ((1+chi1)(1+chi2)).
    A = (hyper.kappa - theta2.chir) / (1.0 + chi1)
    B = 1.0 - (theta2.chir + hyper.kappa * chi1) / (1.0 + chi1)
    denom = 1.0 + theta2.chi2

    m2_sig = theta2.m2[0] + theta2.m2[1]
    m1_sig = theta1.m1[0] + theta1.m1[1]
    mismatch = (
        theta2.q2
        + A**2 * theta1.q1
        + 2.0 * A * theta2.qr
        + B**2 * rho1
        - 2.0 * B * m2_sig
        - 2.0 * A * B * m1_sig
    )
    q2_hat = alpha1 / denom
    qr_hat = -alpha1 * A / denom
    m2_hat_val = alpha1 * B / denom
    chi2_hat = alpha1 * max(mismatch, 0.0) / denom**2
    chir_hat = (
        alpha1
        * (B * rho1 + A * theta1.q1 - (A + B) * m1_sig - m2_sig + theta2.qr)
        / ((1.0 + chi1) * denom)
    )

    # z2 | z1 needs a valid conditional variance: |chir_hat| <= sqrt(chi1_hat chi2_hat)
    bound = math.sqrt(max(theta1.chi1_hat, 0.0) * max(chi2_hat, 0.0))
    clipped = False
    if abs(chir_hat) > bound:
        chir_hat = math.copysign(bound, chir_hat)
        clipped = True

    k1 = geometry.num_classes + 1
    m2_hat = np.zeros(k1)
    m2_hat[0] = m2_hat_val
    if k1 > 1:
        m2_hat[1] = m2_hat_val
    hats = {
        "A": A,
        "B": B,
        "q2_hat": q2_hat,
        "qr_hat": qr_hat,
        "m2_hat": m2_hat,
        "chi2_hat": chi2_hat,
        "chir_hat": chir_hat,
    }
    return hats, clipped


def _stage2_expectations_quad(hats, theta1, blocks, hyper, options):
    q1_hat = theta1.q1_hat
    chi1_hat = theta1.chi1_hat
    q2_hat = hats["q2_hat"]
    qr_hat = hats["qr_hat"]
    chi2_hat = hats["chi2_hat"]
    chir_hat = hats["chir_hat"]
    lam2, dlam = hyper.lambda2, hyper.dlambda

    ratio = chir_hat / chi1_hat if chi1_hat > 0 else 0.0
    c1_sq = max(chi2_hat - (chir_hat**2 / chi1_hat if chi1_hat > 0 else 0.0), 0.0)

    q2 = 0.0
    qr = 0.0
    chi2 = 0.0
    chir = 0.0
    m2 = np.zeros(len(blocks) - 1)
    for b, blk in enumerate(blocks):
        m2h = hats["m2_hat"][b] if blk.signal else 0.0
        m2_eff = m2h - ratio * blk.m1_hat
        a0 = ratio * blk.h + m2_eff * blk.mustar + qr_hat * blk.x1
        s2 = math.sqrt(c1_sq + m2_eff**2 * blk.var_star)
        if math.isinf(dlam):
            thr = np.where(blk.active1 > 0, lam2, np.inf)
        else:
            thr = np.where(blk.active1 > 0, lam2, lam2 + dlam)
        p, e1, e2 = soft_gauss_moments(a0, s2, thr)

        q2 += blk.fraction * float(blk.w @ e2) / q2_hat**2
        qr += blk.fraction * float(blk.w @ (blk.x1 * e1)) / q2_hat
        chi2 += blk.fraction * float(blk.w @ p) / q2_hat
        if options.chir_convention == "exact":
            # chi_r = E[x2 * score(z1 | z2-innovation)] / sqrt(chi1_hat),
            # evaluated with the field h held as the outer integration
            # variable so the threshold jump at |h| = lambda1 never meets
            # an integration by parts.
            if chi1_hat > 0 and blk.var_field > 0:
                integrand = (
                    (blk.h / blk.var_field) * e1
                    - (blk.m1_hat * blk.var_star * m2_eff / chi1_hat) * p
                    - ratio * p
                )
                chir += blk.fraction * float(blk.w @ integrand) / q2_hat
        elif options.chir_convention == "x1_channel":
            chir += blk.fraction * (qr_hat / (q1_hat * q2_hat)) * float(
                blk.w @ (blk.active1 * p)
            )
        else:
            chir += blk.fraction * float(
                blk.w @ (p * (ratio + qr_hat * blk.active1 / q1_hat))
            ) / q2_hat
        if blk.has_xstar:
            exxstar = (
                float(blk.w @ (blk.mustar * e1)) + blk.var_star * m2_eff * float(blk.w @ p)
            ) / q2_hat
            m2[b] = blk.fraction * exxstar
    return q2, qr, m2, chi2, chir


def _stage2_expectations_mc(hats, theta1, geometry, hyper, options):
    q1_hat = theta1.q1_hat
    chi1_hat = theta1.chi1_hat
    q2_hat = hats["q2_hat"]
    qr_hat = hats["qr_hat"]
    chi2_hat = hats["chi2_hat"]
    chir_hat = hats["chir_hat"]
    lambda1 = hyper.lambda1

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(options.mc_seed)))
    n = options.mc_samples
    k1 = geometry.num_classes + 1
    fractions = [geometry.pi0, *geometry.pi, negative_fraction(geometry)]

    corr = chir_hat / math.sqrt(chi1_hat * chi2_hat) if chi1_hat > 0 and chi2_hat > 0 else 0.0
    corr = min(max(corr, -1.0), 1.0)

    q2 = qr = chi2 = chir = 0.0
    m2 = np.zeros(k1)
    for b in range(k1 + 1):
        is_neg = b == k1
        m1h = 0.0 if is_neg else float(theta1.m1_hat[b])
        m2h = float(hats["m2_hat"][b]) if (not is_neg and b in (0, 1)) else 0.0
        z1 = rng.standard_normal(n)
        zeta = rng.standard_normal(n)
        xstar = np.zeros(n) if is_neg else rng.standard_normal(n)
        z2 = corr * z1 + math.sqrt(max(1.0 - corr**2, 0.0)) * zeta
        field1 = math.sqrt(chi1_hat) * z1 + m1h * xstar
        x1 = soft_threshold(field1, lambda1) / q1_hat
        x2 = stage2_scalar(
            q2_hat, chi2_hat, m2h, qr_hat, hyper.lambda2, hyper.dlambda, z2, xstar, x1
        )
        act1 = (x1 != 0.0).astype(float)
        act2 = (x2 != 0.0).astype(float)
        frac = fractions[b]
        q2 += frac * float(np.mean(x2 * x2))
        qr += frac * float(np.mean(x2 * x1))
        chi2 += frac * float(np.mean(act2)) / q2_hat
        if options.chir_convention == "exact":
            # score of z1 against the innovation of z2: (z1 - corr z2)/(1 - corr^2)
            if chi1_hat > 0 and abs(corr) < 1.0:
                score = (z1 - corr * z2) / (1.0 - corr**2)
                chir += frac * float(np.mean(x2 * score)) / math.sqrt(chi1_hat)
        elif options.chir_convention == "x1_channel":
            chir += frac * (qr_hat / (q1_hat * q2_hat)) * float(np.mean(act1 * act2))
        else:
            ratio = chir_hat / chi1_hat if chi1_hat > 0 else 0.0
            chir += frac * float(np.mean(act2 * (ratio + qr_hat * act1 / q1_hat))) / q2_hat
        if not is_neg:
            m2[b] = frac * float(np.mean(x2 * xstar))
    return q2, qr, m2, chi2, chir


def stage2_rhs(
    theta2: Theta2,
    theta1: Theta1,
    geometry: ProblemGeometry,
    hyper: Hyperparams,
    options: SolveOptions | None = None,
    nodes: list[_BlockNodes] | None = None,
) -> Theta2:
    """One application of the stage-2 update map with Theta1 held fixed."""
    options = options or SolveOptions()
    hats, clipped = stage2_hats(theta2, theta1, geometry, hyper)
    if options.expectation == "mc":
        q2, qr, m2, chi2, chir = _stage2_expectations_mc(
            hats, theta1, geometry, hyper, options
        )
    else:
        if nodes is None:
            nodes = make_stage2_nodes(theta1, geometry, hyper.lambda1, options)
        q2, qr, m2, chi2, chir = _stage2_expectations_quad(
            hats, theta1, nodes, hyper, options
        )
    out = Theta2(
        m2=m2,
        m2_hat=hats["m2_hat"],
        q2=q2,
        q2_hat=hats["q2_hat"],
        qr=qr,
        qr_hat=hats["qr_hat"],
        chi2=chi2,
        chi2_hat=hats["chi2_hat"],
        chir=chir,
        chir_hat=hats["chir_hat"],
        A=hats["A"],
        B=hats["B"],
    )
    object.__setattr__(out, "_clipped", clipped)
    return out


def zero_theta2(geometry: ProblemGeometry, theta1: Theta1, hyper: Hyperparams) -> Theta2:
    """All-zero second-stage estimator as a stable starting point."""
    k1 = geometry.num_classes + 1
    base = Theta2(
        m2=np.zeros(k1),
        m2_hat=np.zeros(k1),
        q2=0.0,
        q2_hat=geometry.alpha[0],
        qr=0.0,
        qr_hat=0.0,
        chi2=0.0,
        chi2_hat=0.0,
        chir=0.0,
        chir_hat=0.0,
    )
    hats, _ = stage2_hats(base, theta1, geometry, hyper)
    return Theta2(
        m2=np.zeros(k1),
        m2_hat=hats["m2_hat"],
        q2=0.0,
        q2_hat=hats["q2_hat"],
        qr=0.0,
        qr_hat=hats["qr_hat"],
        chi2=0.0,
        chi2_hat=hats["chi2_hat"],
        chir=0.0,
        chir_hat=hats["chir_hat"],
        A=hats["A"],
        B=hats["B"],
    )


def solve_stage2(
    theta1: Theta1,
    geometry: ProblemGeometry,
    hyper: Hyperparams,
    options: SolveOptions | None = None,
    init: Theta2 | None = None,
    nodes: list[_BlockNodes] | None = None,
) -> tuple[Theta2, FixedPointInfo]:
    """Solve the stage-2 equations of state with Theta1 held fixed.

    ``nodes`` may carry precomputed quadrature nodes (from
    ``make_stage2_nodes`` with the same theta1 and lambda1) to amortize
    setup across a hyperparameter sweep.
    """
    options = options or SolveOptions()
    if options.expectation != "mc" and nodes is None:
        nodes = make_stage2_nodes(theta1, geometry, hyper.lambda1, options)
    theta0 = init if init is not None else zero_theta2(geometry, theta1, hyper)
    k = geometry.num_classes
    clip_count = 0

    def rhs_vec(v):
        nonlocal clip_count
        theta = Theta2.from_vector(v, k)
        new = stage2_rhs(theta, theta1, geometry, hyper, options, nodes=nodes)
        if getattr(new, "_clipped", False):
            clip_count += 1
        return new.to_vector()

    x, iters, res, gamma = damped_fixed_point(
        theta0.to_vector(),
        rhs_vec,
        tolerance=options.tolerance,
        max_iters=options.max_iters,
        damping=options.damping,
    )
    theta = Theta2.from_vector(x, k)
    hats, _ = stage2_hats(theta, theta1, geometry, hyper)
    theta = Theta2.from_vector(x, k, A=hats["A"], B=hats["B"])
    info = FixedPointInfo(
        iterations=iters,
        residual=res,
        converged=True,
        damping_final=gamma,
        clipped_chir_hat=clip_count,
    )
    return theta, info


def eps2(
    theta1: Theta1, theta2: Theta2, geometry: ProblemGeometry, kappa: float
) -> float:
    """Asymptotic second-stage generalization error."""
    alpha1 = geometry.alpha[0]
    return alpha1 * (
        theta2.q2
        + kappa**2 * theta1.q1
        + 2.0 * kappa * theta2.qr
        + rho(geometry, 1)
        - 2.0 * (theta2.m2[0] + theta2.m2[1])
        - 2.0 * kappa * (theta1.m1[0] + theta1.m1[1])
    )


def order_params(theta1: Theta1, theta2: Theta2 | None = None) -> dict:
    """Predicted large-N limits of norms and overlaps of the two regressors."""
    out = {
        "q1": theta1.q1,
        "m1": list(map(float, theta1.m1)),
    }
    if theta2 is not None:
        out.update(
            q2=theta2.q2,
            qr=theta2.qr,
            m2=list(map(float, theta2.m2)),
        )
    return out
