from .scalar import soft_threshold, stage1_scalar, stage2_scalar
from .stage1 import eps1, lambda_inf_theta1, solve_stage1, stage1_rhs
from .stage2 import eps2, order_params, solve_stage2, stage2_rhs, zero_theta2
from .state import (
    FixedPointInfo,
    ReplicaConvergenceError,
    SolveOptions,
    Theta1,
    Theta2,
)

__all__ = [
    "FixedPointInfo",
    "ReplicaConvergenceError",
    "SolveOptions",
    "Theta1",
    "Theta2",
    "eps1",
    "eps2",
    "lambda_inf_theta1",
    "order_params",
    "solve_stage1",
    "solve_stage2",
    "soft_threshold",
    "stage1_rhs",
    "stage1_scalar",
    "stage2_rhs",
    "stage2_scalar",
    "zero_theta2",
]
