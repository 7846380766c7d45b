"""Damped fixed-point driver shared by both stages.

Iterates x <- (1 - g) x + g rhs(x) with adaptive damping: the step shrinks
when the residual oscillates and cautiously grows after a run of steady
decreases.  Everything is deterministic.
"""

from __future__ import annotations

import numpy as np

from .state import ReplicaConvergenceError

__all__ = ["damped_fixed_point"]


def damped_fixed_point(
    x0: np.ndarray,
    rhs,
    tolerance: float,
    max_iters: int,
    damping: float,
):
    """Run the damped iteration until ||rhs(x) - x||_inf <= tolerance.

    Returns (x, iterations, residual, damping_final).  Raises
    ReplicaConvergenceError on non-convergence or non-finite updates.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    gamma = float(damping)
    prev_res = np.inf
    worse_streak = 0
    better_streak = 0

    for it in range(1, max_iters + 1):
        fx = rhs(x)
        if not np.all(np.isfinite(fx)):
            raise ReplicaConvergenceError(
                f"non-finite update at iteration {it}", residual=np.inf, state=x
            )
        res = float(np.max(np.abs(fx - x)))
        if res <= tolerance:
            return x, it, res, gamma

        if res > prev_res * (1.0 + 1e-12):
            worse_streak += 1
            better_streak = 0
            if worse_streak >= 2:
                gamma = max(gamma * 0.5, 1e-3)
                worse_streak = 0
        else:
            better_streak += 1
            worse_streak = 0
            if better_streak >= 8:
                gamma = min(gamma * 1.25, 0.95)
                better_streak = 0
        prev_res = res
        x = (1.0 - gamma) * x + gamma * fx

    raise ReplicaConvergenceError(
        f"no fixed point after {max_iters} iterations "
        f"(residual {prev_res:.3e}); try stronger damping",
        residual=prev_res,
        state=x,
    )
