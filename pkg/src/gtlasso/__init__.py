"""gtlasso: generalized Trans-Lasso estimation and replica asymptotics.

The package pairs a finite-dimensional two-stage sparse-regression solver
(pooled pretraining Lasso followed by an offset, support-weighted
fine-tuning Lasso) with a scalar fixed-point solver that predicts the
estimator's asymptotic generalization error.  Each side serves as the
other's test oracle.
"""

from .core import (
    Estimate,
    Hyperparams,
    ProblemGeometry,
    negative_fraction,
    pretraining_path,
    rho,
)

__version__ = "0.1.0"

__all__ = [
    "Estimate",
    "Hyperparams",
    "ProblemGeometry",
    "negative_fraction",
    "pretraining_path",
    "rho",
    "__version__",
]
