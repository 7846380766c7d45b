"""Shared domain vocabulary: problem geometry, hyperparameters, estimates.

The asymptotic problem is described by the fractions of features living on
the common support (``pi0``), on each class's unique support (``pi[k]``),
the per-class sample ratios ``alpha[k]`` and noise levels ``sigma[k]``.
Hyperparameters bundle the four tunables of the generalized two-stage
algorithm: the pretraining penalty ``lambda1``, the fine-tuning base
penalty ``lambda2``, the transfer coefficient ``kappa`` and the extra
off-support penalty ``dlambda`` (``math.inf`` encodes a hard support
constraint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProblemGeometry",
    "Hyperparams",
    "Estimate",
    "negative_fraction",
    "rho",
    "pretraining_path",
]


def _as_float_tuple(values, name: str) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in values)
    except TypeError as exc:
        raise ValueError(f"{name} must be a sequence of numbers") from exc
    if not all(math.isfinite(v) for v in out):
        raise ValueError(f"{name} entries must be finite, got {out}")
    return out


@dataclass(frozen=True)
class ProblemGeometry:
    """Asymptotic description of a K-class sparse regression problem.

    Parameters
    ----------
    pi0 : float
        Fraction of features on the support common to all classes.
    pi : sequence of float
        Per-class unique-support fractions, one entry per class.
    alpha : sequence of float
        Per-class sample-to-feature ratios M_k / N, all positive.
    sigma : sequence of float
        Per-class noise standard deviations, all non-negative.
    """

    pi0: float
    pi: tuple[float, ...]
    alpha: tuple[float, ...]
    sigma: tuple[float, ...]

    def __init__(self, pi0: float, pi, alpha, sigma):
        object.__setattr__(self, "pi0", float(pi0))
        object.__setattr__(self, "pi", _as_float_tuple(pi, "pi"))
        object.__setattr__(self, "alpha", _as_float_tuple(alpha, "alpha"))
        object.__setattr__(self, "sigma", _as_float_tuple(sigma, "sigma"))
        self._validate()

    def _validate(self) -> None:
        if not math.isfinite(self.pi0) or not 0.0 <= self.pi0 <= 1.0:
            raise ValueError(f"pi0 must lie in [0, 1], got {self.pi0}")
        k = len(self.pi)
        if k == 0:
            raise ValueError("at least one class is required")
        if len(self.alpha) != k or len(self.sigma) != k:
            raise ValueError(
                f"pi, alpha, sigma must have one entry per class; got lengths "
                f"{k}, {len(self.alpha)}, {len(self.sigma)}"
            )
        if any(not 0.0 <= p <= 1.0 for p in self.pi):
            raise ValueError(f"pi entries must lie in [0, 1], got {self.pi}")
        total = self.pi0 + sum(self.pi)
        if total > 1.0 + 1e-12:
            raise ValueError(
                f"support fractions exceed 1: pi0 + sum(pi) = {total:.6g}"
            )
        if any(a <= 0.0 for a in self.alpha):
            raise ValueError(f"alpha entries must be positive, got {self.alpha}")
        if any(s < 0.0 for s in self.sigma):
            raise ValueError(f"sigma entries must be non-negative, got {self.sigma}")

    @property
    def num_classes(self) -> int:
        return len(self.pi)

    @property
    def alpha_total(self) -> float:
        return float(sum(self.alpha))

    def to_dict(self) -> dict:
        return {
            "pi0": self.pi0,
            "pi": list(self.pi),
            "alpha": list(self.alpha),
            "sigma": list(self.sigma),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemGeometry":
        return cls(pi0=d["pi0"], pi=d["pi"], alpha=d["alpha"], sigma=d["sigma"])


def negative_fraction(geometry: ProblemGeometry) -> float:
    """Fraction of features absent from every class's linear model."""
    return 1.0 - geometry.pi0 - sum(geometry.pi)


def rho(geometry: ProblemGeometry, k: int) -> float:
    """Second moment of a class's response: pi[k] + pi0 + sigma[k]^2.

    ``k`` is 1-based, matching the class numbering used throughout.
    """
    if not 1 <= k <= geometry.num_classes:
        raise ValueError(f"class index k={k} out of range 1..{geometry.num_classes}")
    return geometry.pi[k - 1] + geometry.pi0 + geometry.sigma[k - 1] ** 2


@dataclass(frozen=True)
class Hyperparams:
    """The four tunables of the generalized two-stage estimator.

    ``dlambda = math.inf`` is a legal sentinel: the fine-tuning stage then
    clamps every coordinate outside the pretrained support to exactly zero
    instead of adding a large-but-finite penalty.
    """

    lambda1: float
    lambda2: float
    kappa: float = 0.0
    dlambda: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lambda1) and self.lambda1 >= 0.0):
            raise ValueError(f"lambda1 must be finite and >= 0, got {self.lambda1}")
        if not (math.isfinite(self.lambda2) and self.lambda2 >= 0.0):
            raise ValueError(f"lambda2 must be finite and >= 0, got {self.lambda2}")
        if not (math.isfinite(self.kappa) and self.kappa >= 0.0):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa}")
        if math.isnan(self.dlambda) or self.dlambda < 0.0:
            raise ValueError(f"dlambda must be >= 0 (inf allowed), got {self.dlambda}")

    @property
    def support_constrained(self) -> bool:
        return math.isinf(self.dlambda)

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "kappa": self.kappa,
            "dlambda": "inf" if math.isinf(self.dlambda) else self.dlambda,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        dl = d.get("dlambda", 0.0)
        if isinstance(dl, str):
            dl = math.inf if dl.lower() in ("inf", "infinity") else float(dl)
        return cls(
            lambda1=float(d["lambda1"]),
            lambda2=float(d["lambda2"]),
            kappa=float(d.get("kappa", 0.0)),
            dlambda=float(dl),
        )


def pretraining_path(s: float, lambda2: float) -> tuple[float, float]:
    """Map the interpolation parameter s in [0, 1] to (kappa, dlambda).

    kappa = 1 - s and dlambda = lambda2 * (1 - s) / s.  The endpoint s = 1
    gives (0, 0), a plain single-dataset fit; s = 0 gives (1, inf), a fit
    constrained to the pretrained support.  No s reaches (1, 0), which is
    the Trans-Lasso point.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return 1.0, math.inf
    return 1.0 - s, lambda2 * (1.0 - s) / s


@dataclass(frozen=True)
class Estimate:
    """A fitted coefficient vector with its exact support.

    Coordinate descent passes every update through soft thresholding, so
    zeros are bit-exact and the support is simply the nonzero set.
    """

    coefficients: np.ndarray
    stage: str = "first"

    def __init__(self, coefficients: np.ndarray, stage: str = "first"):
        coef = np.asarray(coefficients, dtype=np.float64)
        if coef.ndim != 1:
            raise ValueError("coefficients must be a 1-D vector")
        if stage not in ("first", "second"):
            raise ValueError(f"stage must be 'first' or 'second', got {stage!r}")
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "stage", stage)

    @property
    def support(self) -> np.ndarray:
        """Indices of exactly nonzero coefficients."""
        return np.flatnonzero(self.coefficients)

    @property
    def support_mask(self) -> np.ndarray:
        return self.coefficients != 0.0

    def __len__(self) -> int:
        return self.coefficients.shape[0]
