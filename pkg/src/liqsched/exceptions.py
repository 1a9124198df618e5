"""Exception hierarchy.

Everything raised on bad input derives from :class:`LiquidityError`, which is a
``ValueError`` so callers that only care about "bad input" can catch that.
"""


class LiquidityError(ValueError):
    """Base class for invalid liquidity inputs and infeasible schedules."""


class PatternError(LiquidityError):
    """Malformed pattern (shape mismatch, unknown kind, ...)."""


class EmptyMarket(PatternError):
    """Market depth vanishes identically."""


class NonMonotoneGrid(PatternError):
    """Time grid is not strictly increasing."""


class NegativeValue(PatternError):
    """A depth, resilience, horizon or mark-up value is negative or not finite."""


class InfiniteImpact(LiquidityError):
    """A trade is placed at a time where the market has no depth."""


class DivisionByZeroDepth(LiquidityError):
    """A mark-up increment falls on a time where resilience-adjusted depth is zero."""


class ZeroDepthNode(LiquidityError):
    """The discrete cost form needs strictly positive depth at every node."""


class TooLarge(LiquidityError):
    """Brute-force enumeration requested for too many nodes."""


class InvalidParams(LiquidityError):
    """Closed-form parameters outside their domain."""


class NoConvergence(RuntimeError):
    """An iterative routine hit its iteration cap."""
