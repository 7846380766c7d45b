"""The two stages of the generalized Trans-Lasso on finite data.

Pretraining pools every dataset into one row-stacked Lasso with a uniform
penalty.  Fine-tuning fits the target dataset only, after subtracting
``kappa * A @ x_first`` from the response, with penalty ``lambda2`` on the
pretrained support and ``lambda2 + dlambda`` off it.
"""

from __future__ import annotations

import math

import numpy as np

from ..core import Estimate, Hyperparams, ProblemGeometry, rho
from .weighted import SolverOptions, WeightedLassoProblem, fit_weighted_lasso

__all__ = ["fit_pretraining", "fit_finetune", "conditional_gen_error"]


def _stack(datasets) -> tuple[np.ndarray, np.ndarray]:
    designs = [np.asarray(A, dtype=np.float64) for A, _ in datasets]
    responses = [np.asarray(y, dtype=np.float64) for _, y in datasets]
    n_cols = {A.shape[1] for A in designs}
    if len(n_cols) != 1:
        raise ValueError(f"designs disagree on column count: {sorted(n_cols)}")
    for A, y in zip(designs, responses):
        if A.shape[0] != y.shape[0]:
            raise ValueError("design/response row mismatch within a dataset")
    return np.vstack(designs), np.concatenate(responses)


def fit_pretraining(
    datasets,
    lambda1: float,
    options: SolverOptions | None = None,
    warm_start: Estimate | None = None,
) -> Estimate:
    """Pooled first-stage Lasso over all datasets.

    Minimizes 0.5 * sum_k ||y_k - A_k x||^2 + lambda1 * ||x||_1, which is the
    weighted Lasso on the row-stacked system with a uniform penalty.
    """
    A, y = _stack(datasets)
    pen = np.full(A.shape[1], float(lambda1))
    problem = WeightedLassoProblem(design=A, response=y, penalties=pen)
    return fit_weighted_lasso(problem, options, warm_start=warm_start, stage="first")


def fit_finetune(
    target,
    first_stage: Estimate,
    hyper: Hyperparams,
    options: SolverOptions | None = None,
    warm_start: Estimate | None = None,
) -> Estimate:
    """Second-stage fit on the target dataset.

    The response is offset by ``kappa * A @ x_first`` and coordinates off
    the pretrained support carry the extra penalty ``dlambda`` (an infinite
    ``dlambda`` pins them to zero exactly).
    """
    A, y = target
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(first_stage) != A.shape[1]:
        raise ValueError(
            f"first-stage estimate has {len(first_stage)} coordinates, "
            f"target design has {A.shape[1]} columns"
        )
    offset = hyper.kappa * (A @ first_stage.coefficients)
    off_support = ~first_stage.support_mask
    pen = np.full(A.shape[1], hyper.lambda2)
    if hyper.support_constrained:
        pen[off_support] = np.inf
    else:
        pen[off_support] += hyper.dlambda
    problem = WeightedLassoProblem(design=A, response=y, offset=offset, penalties=pen)
    return fit_weighted_lasso(problem, options, warm_start=warm_start, stage="second")


def conditional_gen_error(
    first_stage: Estimate,
    second_stage: Estimate | None,
    truth: list[np.ndarray],
    geometry: ProblemGeometry,
    hyper: Hyperparams,
) -> tuple[float, float | None]:
    """Exact expected test error conditional on the fitted estimates.

    For a fresh Gaussian design with variance-1/N entries, the expectation
    over test data is available in closed form:

        eps1 = sum_k alpha_k * (||x1 - r_k||^2 / N + sigma_k^2)
        eps2 = alpha_1 * (||kappa*x1 + x2 - r_1||^2 / N + sigma_1^2)

    where ``truth[k-1]`` is the full-length true coefficient vector of
    class k.  No sampling is involved.
    """
    if len(truth) != geometry.num_classes:
        raise ValueError("need one ground-truth vector per class")
    x1 = first_stage.coefficients
    n = float(len(x1))
    eps1 = 0.0
    for k in range(geometry.num_classes):
        r_k = np.asarray(truth[k], dtype=np.float64)
        if r_k.shape != x1.shape:
            raise ValueError("ground-truth vector has wrong dimension")
        diff = x1 - r_k
        eps1 += geometry.alpha[k] * (float(diff @ diff) / n + geometry.sigma[k] ** 2)
    if second_stage is None:
        return eps1, None
    combo = hyper.kappa * x1 + second_stage.coefficients
    diff = combo - np.asarray(truth[0], dtype=np.float64)
    eps2 = geometry.alpha[0] * (float(diff @ diff) / n + geometry.sigma[0] ** 2)
    return eps1, eps2
