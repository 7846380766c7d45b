"""Weighted Lasso solved by cyclic coordinate descent with an active set.

One solver core backs both stages of the two-stage estimator: it minimizes

    0.5 * || (y - offset) - A x ||^2  +  sum_i penalties_i * |x_i|

with per-coordinate non-negative penalties.  An infinite penalty clamps the
coordinate to exactly zero.  The exit criterion is the maximum KKT violation
over all coordinates, so every returned estimate carries a stationarity
certificate at the requested tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Estimate

try:  # compiled sweep, built via setup.py
    from . import _cd_fast

    _KERNEL = _cd_fast.cd_cycle
    KERNEL_NAME = "cython"
except ImportError:  # pragma: no cover - exercised only in source-only installs
    from . import _cd_py

    _KERNEL = _cd_py.cd_cycle
    KERNEL_NAME = "python"

from . import _cd_py

__all__ = [
    "WeightedLassoProblem",
    "SolverOptions",
    "ConvergenceError",
    "soft_threshold",
    "fit_weighted_lasso",
    "kkt_violations",
    "objective",
    "KERNEL_NAME",
]


def soft_threshold(h: float, threshold: float):
    """Minimizer of 0.5*x^2 - h*x + threshold*|x|: sign(h)*max(|h|-thr, 0)."""
    return np.sign(h) * np.maximum(np.abs(h) - threshold, 0.0)


@dataclass(frozen=True)
class WeightedLassoProblem:
    design: np.ndarray
    response: np.ndarray
    offset: np.ndarray | None = None
    penalties: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.design, dtype=np.float64)
        y = np.asarray(self.response, dtype=np.float64)
        if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
            raise ValueError(
                f"design {A.shape} and response {y.shape} are inconsistent"
            )
        object.__setattr__(self, "design", A)
        object.__setattr__(self, "response", y)
        if self.offset is not None:
            off = np.asarray(self.offset, dtype=np.float64)
            if off.shape != y.shape:
                raise ValueError(f"offset shape {off.shape} != response {y.shape}")
            object.__setattr__(self, "offset", off)
        if self.penalties is not None:
            pen = np.asarray(self.penalties, dtype=np.float64)
            if pen.shape != (A.shape[1],):
                raise ValueError(
                    f"penalties shape {pen.shape} != number of columns {A.shape[1]}"
                )
            if np.any(np.isnan(pen)) or np.any(pen < 0):
                raise ValueError("penalties must be non-negative (inf allowed)")
            object.__setattr__(self, "penalties", pen)

    @property
    def n_features(self) -> int:
        return self.design.shape[1]

    def effective_response(self) -> np.ndarray:
        if self.offset is None:
            return self.response.copy()
        return self.response - self.offset

    def penalty_vector(self) -> np.ndarray:
        if self.penalties is None:
            return np.zeros(self.n_features)
        return self.penalties


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-8
    max_iters: int = 100_000
    screening: bool = True
    kernel: str = "auto"  # "auto" | "cython" | "python"
    track_objective: bool = False

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")
        if self.kernel not in ("auto", "cython", "python"):
            raise ValueError(f"unknown kernel {self.kernel!r}")


class ConvergenceError(RuntimeError):
    """Raised when the sweep budget is exhausted before the KKT certificate."""

    def __init__(self, message: str, kkt_residual: float, estimate: Estimate):
        super().__init__(message)
        self.kkt_residual = kkt_residual
        self.estimate = estimate


def objective(problem: WeightedLassoProblem, x: np.ndarray) -> float:
    r = problem.effective_response() - problem.design @ x
    pen = problem.penalty_vector()
    finite = np.isfinite(pen)
    return 0.5 * float(r @ r) + float(pen[finite] @ np.abs(x[finite]))


def kkt_violations(problem: WeightedLassoProblem, x: np.ndarray,
                   residual: np.ndarray | None = None) -> np.ndarray:
    """Per-coordinate stationarity gap of the weighted Lasso objective.

    Active coordinates report |(A^T r)_i - p_i sign(x_i)|; inactive ones
    report max(|(A^T r)_i| - p_i, 0).  Infinite-penalty coordinates are
    feasible by construction and report 0.
    """
    if residual is None:
        residual = problem.effective_response() - problem.design @ x
    g = problem.design.T @ residual
    pen = problem.penalty_vector()
    finite = np.isfinite(pen)
    pen_f = np.where(finite, pen, 0.0)
    viol = np.where(
        x != 0.0,
        np.abs(g - pen_f * np.sign(x)),
        np.maximum(np.abs(g) - pen_f, 0.0),
    )
    viol[~finite] = 0.0
    return viol


def _pick_kernel(name: str):
    if name == "auto":
        return _KERNEL
    if name == "cython":
        if KERNEL_NAME != "cython":
            raise RuntimeError("compiled kernel requested but not available")
        return _KERNEL
    return _cd_py.cd_cycle


def fit_weighted_lasso(
    problem: WeightedLassoProblem,
    options: SolverOptions | None = None,
    warm_start: Estimate | None = None,
    stage: str = "first",
) -> Estimate:
    """Solve the weighted Lasso to the requested KKT tolerance.

    The active-set loop sweeps the current working set until its internal
    violations settle, then runs one full vectorized KKT pass; coordinates
    violating the certificate join the working set.  The solver exits only
    when a full pass certifies every coordinate.
    """
    options = options or SolverOptions()
    kernel = _pick_kernel(options.kernel)
    A = np.asfortranarray(problem.design)
    y = problem.effective_response()
    pen = problem.penalty_vector()
    n = problem.n_features

    free = np.isfinite(pen)  # inf-penalty coordinates stay pinned at zero
    col_sq = np.einsum("ij,ij->j", A, A)

    if warm_start is not None:
        if len(warm_start) != n:
            raise ValueError("warm start has wrong dimension")
        x = warm_start.coefficients.copy()
        x[~free] = 0.0
    else:
        x = np.zeros(n)
    r = y - A @ x

    pen_solver = np.where(free, pen, np.inf)
    obj_history: list[float] = []
    all_free_idx = np.flatnonzero(free & (col_sq > 0)).astype(np.int64)

    if not options.screening:
        sweeps = 0
        while True:
            viol = kkt_violations(problem, x, r)
            if viol.max(initial=0.0) <= options.tolerance:
                break
            if sweeps >= options.max_iters:
                est = Estimate(x, stage=stage)
                raise ConvergenceError(
                    f"no convergence after {sweeps} sweeps "
                    f"(KKT residual {viol.max():.3e})",
                    kkt_residual=float(viol.max()),
                    estimate=est,
                )
            kernel(A, x, r, pen_solver, col_sq, all_free_idx)
            sweeps += 1
            if options.track_objective:
                obj_history.append(objective(problem, x))
        est = Estimate(x, stage=stage)
        if options.track_objective:
            object.__setattr__(est, "objective_history", obj_history)  # type: ignore[attr-defined]
        return est

    # Active-set strategy: converge the working set, then certify globally.
    active = np.flatnonzero((x != 0.0) & free).astype(np.int64)
    if active.size == 0:
        active = all_free_idx
    sweeps = 0
    while True:
        inner_target = 0.5 * options.tolerance
        while active.size:
            sub_viol = kernel(A, x, r, pen_solver, col_sq, active)
            sweeps += 1
            if options.track_objective:
                obj_history.append(objective(problem, x))
            if sub_viol <= inner_target or sweeps >= options.max_iters:
                break
        viol = kkt_violations(problem, x, r)
        worst = float(viol.max(initial=0.0))
        if worst <= options.tolerance:
            break
        if sweeps >= options.max_iters:
            est = Estimate(x, stage=stage)
            raise ConvergenceError(
                f"no convergence after {sweeps} sweeps (KKT residual {worst:.3e})",
                kkt_residual=worst,
                estimate=est,
            )
        violators = np.flatnonzero(viol > options.tolerance)
        active = np.union1d(np.flatnonzero(x != 0.0), violators)
        active = active[free[active] & (col_sq[active] > 0)].astype(np.int64)

    est = Estimate(x, stage=stage)
    if options.track_objective:
        object.__setattr__(est, "objective_history", obj_history)  # type: ignore[attr-defined]
    return est
