from .twostage import conditional_gen_error, fit_finetune, fit_pretraining
from .weighted import (
    KERNEL_NAME,
    ConvergenceError,
    SolverOptions,
    WeightedLassoProblem,
    fit_weighted_lasso,
    kkt_violations,
    objective,
    soft_threshold,
)

__all__ = [
    "KERNEL_NAME",
    "ConvergenceError",
    "SolverOptions",
    "WeightedLassoProblem",
    "conditional_gen_error",
    "fit_finetune",
    "fit_pretraining",
    "fit_weighted_lasso",
    "kkt_violations",
    "objective",
    "soft_threshold",
]
