"""Order-parameter containers and solver options for the equations of state."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ["Theta1", "Theta2", "SolveOptions", "FixedPointInfo", "ReplicaConvergenceError"]


@dataclass(frozen=True)
class Theta1:
    """First-stage order parameters: overlaps m1[k] (k = 0..K), norm q1,
    susceptibility chi1, and their conjugates."""

    m1: np.ndarray
    m1_hat: np.ndarray
    q1: float
    q1_hat: float
    chi1: float
    chi1_hat: float

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.m1, self.m1_hat, [self.q1, self.q1_hat, self.chi1, self.chi1_hat]]
        )

    @classmethod
    def from_vector(cls, v: np.ndarray, num_classes: int) -> "Theta1":
        k1 = num_classes + 1
        return cls(
            m1=v[:k1].copy(),
            m1_hat=v[k1 : 2 * k1].copy(),
            q1=float(v[2 * k1]),
            q1_hat=float(v[2 * k1 + 1]),
            chi1=float(v[2 * k1 + 2]),
            chi1_hat=float(v[2 * k1 + 3]),
        )

    def to_dict(self) -> dict:
        return {
            "m1": list(map(float, self.m1)),
            "m1_hat": list(map(float, self.m1_hat)),
            "q1": self.q1,
            "q1_hat": self.q1_hat,
            "chi1": self.chi1,
            "chi1_hat": self.chi1_hat,
        }


@dataclass(frozen=True)
class Theta2:
    """Second-stage order parameters, including the cross overlaps q_r and
    chi_r that couple the two stages, plus the derived coefficients A and B."""

    m2: np.ndarray
    m2_hat: np.ndarray
    q2: float
    q2_hat: float
    qr: float
    qr_hat: float
    chi2: float
    chi2_hat: float
    chir: float
    chir_hat: float
    A: float = 0.0
    B: float = 1.0

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.m2,
                self.m2_hat,
                [
                    self.q2,
                    self.q2_hat,
                    self.qr,
                    self.qr_hat,
                    self.chi2,
                    self.chi2_hat,
                    self.chir,
                    self.chir_hat,
                ],
            ]
        )

    @classmethod
    def from_vector(cls, v: np.ndarray, num_classes: int, A=0.0, B=1.0) -> "Theta2":
        k1 = num_classes + 1
        tail = v[2 * k1 :]
        return cls(
            m2=v[:k1].copy(),
            m2_hat=v[k1 : 2 * k1].copy(),
            q2=float(tail[0]),
            q2_hat=float(tail[1]),
            qr=float(tail[2]),
            qr_hat=float(tail[3]),
            chi2=float(tail[4]),
            chi2_hat=float(tail[5]),
            chir=float(tail[6]),
            chir_hat=float(tail[7]),
            A=A,
            B=B,
        )

    def to_dict(self) -> dict:
        return {
            "m2": list(map(float, self.m2)),
            "m2_hat": list(map(float, self.m2_hat)),
            "q2": self.q2,
            "q2_hat": self.q2_hat,
            "qr": self.qr,
            "qr_hat": self.qr_hat,
            "chi2": self.chi2,
            "chi2_hat": self.chi2_hat,
            "chir": self.chir,
            "chir_hat": self.chir_hat,
            "A": self.A,
            "B": self.B,
        }


@dataclass(frozen=True)
class SolveOptions:
    """Controls for the damped fixed-point iteration and its expectations.

    ``expectation`` selects the engine: "analytic" evaluates the Gaussian
    moments in closed form (stage 1) or by deterministic field quadrature
    (stage 2); "mc" uses plain Monte Carlo and exists as an oracle.
    ``chir_convention`` picks how the cross response chi_r differentiates
    the second-stage minimizer with respect to the first-stage field.
    "exact" evaluates the stationarity condition of the free energy without
    any smoothness assumption on the penalty switch (valid for dlambda > 0,
    where the effective threshold jumps at the first-stage activity
    boundary).  "x1_channel" counts only the coupling through x1 and
    coincides with "exact" when dlambda = 0; "total" additionally
    differentiates through the correlated part of the second-stage field.
    Both approximations are kept for comparison against the finite-size
    oracle.
    """

    damping: float = 0.5
    tolerance: float = 1e-10
    max_iters: int = 5000
    expectation: str = "analytic"  # "analytic" | "mc"
    quad_core: int = 64
    quad_tail: int = 40
    mc_samples: int = 200_000
    mc_seed: int = 0
    chir_convention: str = "exact"  # "exact" | "x1_channel" | "total"

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.expectation not in ("analytic", "mc"):
            raise ValueError(f"unknown expectation engine {self.expectation!r}")
        if self.chir_convention not in ("exact", "x1_channel", "total"):
            raise ValueError(f"unknown chi_r convention {self.chir_convention!r}")

    def with_(self, **kw) -> "SolveOptions":
        return replace(self, **kw)


@dataclass(frozen=True)
class FixedPointInfo:
    iterations: int
    residual: float
    converged: bool
    damping_final: float
    clipped_chir_hat: int = 0


class ReplicaConvergenceError(RuntimeError):
    """Fixed-point iteration failed; carries the final residual and state."""

    def __init__(self, message: str, residual: float, state=None):
        super().__init__(message)
        self.residual = residual
        self.state = state
