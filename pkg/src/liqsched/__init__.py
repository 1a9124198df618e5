"""Optimal order execution under deterministic time-varying liquidity."""
from .cost import (
    CostReport,
    FocReport,
    discounted_cost,
    execution_cost,
    foc_report,
    foc_residuals,
    k_functional,
    markup_path,
    x_to_y,
    y_to_x,
)
from .envelope import EnvelopeResult, compute_envelope, concave_envelope, decreasing_envelope, signal
from .estimator import OptimalScheduler
from .exceptions import (
    DivisionByZeroDepth,
    EmptyMarket,
    InfiniteImpact,
    InvalidParams,
    LiquidityError,
    NegativeValue,
    NoConvergence,
    NonMonotoneGrid,
    PatternError,
    TooLarge,
    ZeroDepthNode,
)
from .io import read_pattern, read_schedule
from .oracle import brute_force, convexity_check, cost_matrix, ow_closed_form, projected_gradient
from .pattern import (
    LiquidityGrid,
    LiquidityPattern,
    MonotoneStepCurve,
    PatternKind,
    apply_discount,
    collapse_zero_resilience,
    merge_flat_rho,
    rho,
    sample_grid,
    trading_grid,
    validate,
)
from .scheduler import Schedule, optimal_schedule, solve_multiplier

__version__ = "0.1.0"

__all__ = [
    "CostReport",
    "DivisionByZeroDepth",
    "EmptyMarket",
    "EnvelopeResult",
    "FocReport",
    "InfiniteImpact",
    "InvalidParams",
    "LiquidityError",
    "LiquidityGrid",
    "LiquidityPattern",
    "MonotoneStepCurve",
    "NegativeValue",
    "NoConvergence",
    "NonMonotoneGrid",
    "OptimalScheduler",
    "PatternError",
    "PatternKind",
    "Schedule",
    "TooLarge",
    "ZeroDepthNode",
    "apply_discount",
    "brute_force",
    "collapse_zero_resilience",
    "compute_envelope",
    "concave_envelope",
    "convexity_check",
    "cost_matrix",
    "decreasing_envelope",
    "discounted_cost",
    "execution_cost",
    "foc_report",
    "foc_residuals",
    "k_functional",
    "markup_path",
    "merge_flat_rho",
    "optimal_schedule",
    "ow_closed_form",
    "projected_gradient",
    "read_pattern",
    "read_schedule",
    "rho",
    "sample_grid",
    "signal",
    "solve_multiplier",
    "trading_grid",
    "validate",
    "x_to_y",
    "y_to_x",
]
