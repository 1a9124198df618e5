"""Input-validation helpers shared by the estimator and the CLI."""
from __future__ import annotations

import os
from collections.abc import Mapping
from pathlib import Path

from .exceptions import InvalidParams
from .pattern import LiquidityPattern, validate

__all__ = ["check_pattern", "check_positive", "check_resolution", "default_resolution", "RESOLUTION_ENV"]

RESOLUTION_ENV = "LIQSCHED_RESOLUTION"
DEFAULT_RESOLUTION = 1000


def check_pattern(pattern) -> LiquidityPattern:
    """Accept a :class:`LiquidityPattern`, a mapping of its fields, or a path to a pattern file."""
    if isinstance(pattern, LiquidityPattern):
        return pattern
    if isinstance(pattern, Mapping):
        return validate(pattern)
    if isinstance(pattern, (str, os.PathLike)):
        from .io import read_pattern

        return read_pattern(Path(pattern))
    raise TypeError(f"expected a LiquidityPattern, mapping or path, got {type(pattern).__name__}")


def check_positive(value, name: str, *, allow_zero: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InvalidParams(f"{name} must be a number, got {value!r}") from None
    ok = v >= 0 if allow_zero else v > 0
    if not ok or v != v or v == float("inf"):
        raise InvalidParams(f"{name} must be {'nonnegative' if allow_zero else 'positive'} and finite, got {v}")
    return v


def check_resolution(m) -> int:
    if isinstance(m, bool) or int(m) != m or int(m) < 1:
        raise InvalidParams(f"resolution must be a positive integer, got {m!r}")
    return int(m)


def default_resolution() -> int:
    """Samples per cell: ``$LIQSCHED_RESOLUTION`` if set, else 1000."""
    raw = os.environ.get(RESOLUTION_ENV)
    if raw is None or not raw.strip():
        return DEFAULT_RESOLUTION
    try:
        return check_resolution(int(raw))
    except ValueError:
        raise InvalidParams(f"{RESOLUTION_ENV} must be a positive integer, got {raw!r}") from None
