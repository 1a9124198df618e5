"""Optimal schedules from the concave envelope.

For a multiplier ``y`` the mark-up frontier is ``Y_t = max(y * dens(kappa_tilde_t),
eta0)`` and the cumulative purchases are ``X_t = sum_{s <= t} lambda_s * (Y_s -
Y_{s-})`` with ``Y_{0-} = eta0``.  The multiplier is calibrated so that the total
matches the target.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .envelope import EnvelopeResult, compute_envelope, signal
from .exceptions import EmptyMarket, NoConvergence
from .pattern import (
    Continuity,
    Direction,
    LiquidityGrid,
    LiquidityPattern,
    MonotoneStepCurve,
    sample_grid,
)

__all__ = [
    "Schedule",
    "frontier",
    "schedule_for_multiplier",
    "total_for_multiplier",
    "solve_multiplier",
    "optimal_schedule",
    "zero_resilience_schedule",
    "schedule_from_signal",
    "classify_trades",
]

logger = logging.getLogger(__name__)

BISECTION_TOL = 1e-10
MAX_BISECTIONS = 200


@dataclass(frozen=True, eq=False)
class Schedule:
    """Cumulative purchase schedule on a grid of trading times.

    ``trades[i]`` is bought at ``times[i]``; ``frontier[i]`` is the mark-up level
    (in ``rho``-adjusted units) right after that time.  ``atoms`` and ``rates``
    split the trades into blocks ``(t, size)`` and continuous stretches
    ``(t_start, t_end, rate)``.
    """

    times: np.ndarray
    trades: np.ndarray
    frontier: np.ndarray
    multiplier: float
    eta0: float
    atoms: tuple = ()
    rates: tuple = ()

    @property
    def path(self) -> np.ndarray:
        return np.cumsum(self.trades)

    @property
    def total(self) -> float:
        return float(np.sum(self.trades))

    def cumulative(self, t):
        """``X_t`` (right-continuous, ``X_{0-} = 0``)."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        out = np.concatenate([[0.0], self.path])[idx]
        return float(out) if np.ndim(out) == 0 else out

    def frontier_curve(self) -> MonotoneStepCurve:
        return MonotoneStepCurve(self.times, self.frontier, Continuity.RIGHT, Direction.INCREASING, fill=self.eta0)

    def nonzero(self) -> list[tuple[float, float]]:
        mask = self.trades > 0
        return list(zip(self.times[mask].tolist(), self.trades[mask].tolist()))


def classify_trades(times, trades, step, horizon: float, threshold: float = 10.0):
    """Split grid increments into block trades and continuous-rate stretches.

    An increment standing for a stretch of length ``step > 0`` counts as a block
    when it exceeds ``threshold * total * step / horizon``; otherwise it is
    reported as the rate ``increment / step`` on ``(t - step, t]``.  Increments
    with ``step == 0`` are always blocks.
    """
    times = np.asarray(times, dtype=float)
    trades = np.asarray(trades, dtype=float)
    step = np.asarray(step, dtype=float)
    total = float(trades.sum())
    atoms, rates = [], []
    for t, dx, h in zip(times, trades, step):
        if dx <= 0:
            continue
        if h <= 0 or horizon <= 0 or dx > threshold * total * h / horizon:
            atoms.append((float(t), float(dx)))
        else:
            rates.append((float(t - h), float(t), float(dx / h)))
    return tuple(atoms), tuple(rates)


def frontier(env: EnvelopeResult, y: float, eta0: float = 0.0) -> MonotoneStepCurve:
    """Optimal mark-up frontier ``max(y * dens(kappa_tilde_t), eta0)`` as a right-continuous curve."""
    values = np.maximum(y * env.unit_frontier(), eta0)
    return MonotoneStepCurve(env.grid.times, values, Continuity.RIGHT, Direction.INCREASING, fill=eta0)


def _increments(lam: np.ndarray, unit: np.ndarray, y: float, eta0: float) -> tuple[np.ndarray, np.ndarray]:
    levels = np.maximum(y * unit, eta0)
    dx = lam * np.diff(levels, prepend=eta0)
    return levels, np.maximum(dx, 0.0)


def total_for_multiplier(env: EnvelopeResult, y: float, eta0: float = 0.0) -> float:
    return float(_increments(env.grid.lam, env.unit_frontier(), y, eta0)[1].sum())


def schedule_for_multiplier(
    env: EnvelopeResult,
    y: float,
    eta0: float = 0.0,
    *,
    horizon: float | None = None,
    report_threshold: float = 10.0,
) -> Schedule:
    grid = env.grid
    levels, dx = _increments(grid.lam, env.unit_frontier(), y, eta0)
    if horizon is None:
        horizon = float(grid.times[-1])
    atoms, rates = classify_trades(grid.times, dx, grid.step, horizon, report_threshold)
    return Schedule(grid.times, dx, levels, float(y), float(eta0), atoms, rates)


def solve_multiplier(env: EnvelopeResult, x: float, eta0: float = 0.0) -> float:
    """Multiplier ``y*`` with ``total_for_multiplier(y*) == x``.

    Without initial mark-up the total is linear, ``y * l2_sq``.  Otherwise the
    total is continuous, piecewise linear and strictly increasing once positive:
    it is bracketed by doubling and bisected to ``1e-10`` relative accuracy, and
    the result is then polished by solving the linear piece exactly.
    """
    if x <= 0:
        raise ValueError("target must be positive")
    if eta0 == 0:
        return x / env.l2_sq
    lam, unit = env.grid.lam, env.unit_frontier()

    def total(y):
        return _increments(lam, unit, y, eta0)[1].sum()

    lo, hi = 0.0, max(1.0, eta0 / max(unit[-1], 1e-300))
    doublings = 0
    while total(hi) < x:
        lo, hi = hi, 2 * hi
        doublings += 1
        if doublings > 2000 or not math.isfinite(hi):
            raise NoConvergence("could not bracket the multiplier")
    y = hi
    for _ in range(MAX_BISECTIONS):
        y = 0.5 * (lo + hi)
        tot = total(y)
        if abs(tot - x) <= BISECTION_TOL * x:
            break
        if tot < x:
            lo = y
        else:
            hi = y
    else:
        raise NoConvergence(f"bisection did not reach tolerance in {MAX_BISECTIONS} steps")

    # exact solve on the linear piece: nodes before i0 sit at eta0
    active = np.flatnonzero(y * unit > eta0)
    if active.size:
        i0 = active[0]
        slope = lam[i0] * unit[i0] + np.sum(lam[i0 + 1 :] * np.diff(unit[i0:]))
        y_exact = (x + lam[i0] * eta0) / slope
        same_piece = y_exact * unit[i0] > eta0 and (i0 == 0 or y_exact * unit[i0 - 1] <= eta0)
        if same_piece and abs(total(y_exact) - x) <= abs(total(y) - x):
            y = float(y_exact)
    return float(y)


def zero_resilience_schedule(
    pattern: LiquidityPattern,
    x: float | None = None,
    eta0: float | None = None,
    *,
    resolution: int = 1000,
) -> Schedule:
    """Buy everything at the earliest time of maximal depth.

    Without resilience the mark-up never decays, so the cost is bounded below by
    ``eta0*x + x**2 / (2 max depth)`` with equality exactly for schedules trading
    only where depth is maximal.
    """
    x = pattern.target if x is None else float(x)
    eta0 = pattern.eta0 if eta0 is None else float(eta0)
    grid = sample_grid(pattern, resolution)
    if not np.any(grid.depth > 0):
        raise EmptyMarket("market depth vanishes identically")
    k = int(np.argmax(grid.depth))
    dmax = float(grid.depth[k])
    trades = np.zeros(grid.size)
    trades[k] = x
    level = eta0 + x / dmax
    frontier_values = np.where(np.arange(grid.size) >= k, level, eta0)
    return Schedule(grid.times, trades, frontier_values, level, eta0, ((float(grid.times[k]), x),), ())


def optimal_schedule(
    pattern: LiquidityPattern,
    x: float | None = None,
    eta0: float | None = None,
    *,
    resolution: int = 1000,
    report_threshold: float = 10.0,
    envelope: EnvelopeResult | None = None,
) -> Schedule:
    """Cost-minimal schedule buying ``x`` shares starting from mark-up ``eta0``.

    Stretches without resilience are merged into their best trading time by the
    envelope construction; a pattern without any resilience is solved directly by
    :func:`zero_resilience_schedule`.
    """
    x = pattern.target if x is None else float(x)
    eta0 = pattern.eta0 if eta0 is None else float(eta0)
    if pattern.zero_resilience:
        return zero_resilience_schedule(pattern, x, eta0, resolution=resolution)
    env = envelope if envelope is not None else compute_envelope(pattern, resolution)
    y = solve_multiplier(env, x, eta0)
    sched = schedule_for_multiplier(env, y, eta0, horizon=pattern.horizon, report_threshold=report_threshold)
    logger.debug("multiplier %.12g, l2_sq %.12g, %d grid points", y, env.l2_sq, env.grid.size)
    return sched


def schedule_from_signal(grid: LiquidityGrid, y: float, eta0: float = 0.0) -> np.ndarray:
    """Trades obtained by integrating ``lambda`` against the running max of ``max(y*L*, eta0)``.

    Independent of the hull; used to cross-check :func:`schedule_for_multiplier`.
    """
    L = signal(grid)
    levels = np.maximum(np.maximum.accumulate(y * L), eta0)
    return np.maximum(grid.lam * np.diff(levels, prepend=eta0), 0.0)
