"""Exact evaluation of mark-up, execution cost and first-order conditions.

A schedule here is anything that yields block trades ``(t, size)``: a
:class:`~liqsched.scheduler.Schedule`, an ``(n, 2)`` array or a list of pairs.
Continuous parts of sampled schedules are already represented as many small
blocks, so every formula below is a finite sum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envelope import EnvelopeResult, compute_envelope
from .exceptions import DivisionByZeroDepth, InfiniteImpact
from .pattern import LiquidityGrid, LiquidityPattern, _cumulative, rho
from .scheduler import Schedule

__all__ = [
    "IncreasingPath",
    "MarkupPath",
    "FocReport",
    "CostReport",
    "as_trades",
    "markup_path",
    "execution_cost",
    "discounted_cost",
    "x_to_y",
    "y_to_x",
    "k_functional",
    "k_tilde_functional",
    "y_on_grid",
    "foc_residuals",
    "foc_report",
]


def as_trades(schedule) -> tuple[np.ndarray, np.ndarray]:
    """Sorted trade times and sizes; trades at equal times are merged, zeros dropped.

    Accepts a :class:`Schedule` or ``(t, size)`` pairs.
    """
    if isinstance(schedule, Schedule):
        t, dx = schedule.times, schedule.trades
    else:
        arr = np.asarray(schedule, dtype=float).reshape(-1, 2)
        t, dx = arr[:, 0], arr[:, 1]
    if np.any(dx < 0):
        raise ValueError("trade sizes must be nonnegative (buy programs only)")
    mask = dx > 0
    t, dx = t[mask], dx[mask]
    times, inv = np.unique(t, return_inverse=True)
    sizes = np.zeros(times.size)
    np.add.at(sizes, inv, dx)
    return times, sizes


@dataclass(frozen=True, eq=False)
class IncreasingPath:
    """Right-continuous increasing step path: ``initial`` before ``times[0]``, ``values[i]`` from ``times[i]`` on."""

    times: np.ndarray
    values: np.ndarray
    initial: float

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, prepend=self.initial)

    def __call__(self, t):
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        out = np.concatenate([[self.initial], self.values])[idx]
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class MarkupPath:
    """Mark-up just before and just after each trade; decays by ``rho`` ratios in between."""

    pattern: LiquidityPattern
    eta0: float
    times: np.ndarray
    before: np.ndarray
    after: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        # rho * eta is constant between trades
        scaled = np.concatenate([[self.eta0], self.after * rho(self.pattern, self.times)])
        idx = np.searchsorted(self.times, t, side="right")
        out = scaled[idx] / rho(self.pattern, t)
        return float(out) if np.ndim(out) == 0 else out


def _trade_terms(pattern: LiquidityPattern, times: np.ndarray, sizes: np.ndarray, eta0: float):
    depth = np.atleast_1d(pattern.depth_at(times))
    if np.any(depth <= 0):
        bad = times[depth <= 0][0]
        raise InfiniteImpact(f"trade at t={bad:g} where market depth is zero")
    r = np.atleast_1d(rho(pattern, times))
    w = r * sizes / depth
    y_after = eta0 + np.cumsum(w)
    y_before = y_after - w
    return depth, r, y_before, y_after


def markup_path(pattern: LiquidityPattern, schedule, eta0: float | None = None) -> MarkupPath:
    eta0 = pattern.eta0 if eta0 is None else float(eta0)
    times, sizes = as_trades(schedule)
    _, r, y_before, y_after = _trade_terms(pattern, times, sizes, eta0)
    return MarkupPath(pattern, eta0, times, y_before / r, y_after / r)


@dataclass(frozen=True, eq=False)
class FocReport:
    times: np.ndarray
    residuals: np.ndarray
    increase: np.ndarray
    y: float

    @property
    def min_residual(self) -> float:
        return float(self.residuals.min())

    @property
    def max_abs_at_increase(self) -> float:
        r = self.residuals[self.increase]
        return float(np.abs(r).max()) if r.size else 0.0

    def passes(self, tol: float) -> bool:
        return self.min_residual >= -tol and self.max_abs_at_increase <= tol


@dataclass(frozen=True, eq=False)
class CostReport:
    total_cost: float
    markup: MarkupPath
    eta0_component: float
    impact_component: float
    contributions: np.ndarray
    y_used: float | None = None
    foc: FocReport | None = None

    def to_dict(self) -> dict:
        d = {
            "total_cost": self.total_cost,
            "eta0_component": self.eta0_component,
            "impact_component": self.impact_component,
            "y_used": self.y_used,
            "trades": [
                {"t": float(t), "eta_before": float(b), "eta_after": float(a), "cost": float(c)}
                for t, b, a, c in zip(self.markup.times, self.markup.before, self.markup.after, self.contributions)
            ],
        }
        if self.foc is not None:
            d["foc"] = {
                "y": self.foc.y,
                "min_residual": self.foc.min_residual,
                "max_abs_at_increase": self.foc.max_abs_at_increase,
                "residuals": [
                    {"t": float(t), "residual": float(r), "increase": bool(i)}
                    for t, r, i in zip(self.foc.times, self.foc.residuals, self.foc.increase)
                ],
            }
        return d


def execution_cost(
    pattern: LiquidityPattern,
    schedule,
    eta0: float | None = None,
    *,
    check_foc: bool = False,
    resolution: int = 1000,
) -> CostReport:
    """Total mark-up cost ``sum dX * (eta_before + dX / (2 depth))``.

    Raises :class:`InfiniteImpact` for a trade where the market has no depth
    (in particular after the horizon).  With ``check_foc`` the first-order
    residuals of the schedule are attached.
    """
    eta0 = pattern.eta0 if eta0 is None else float(eta0)
    times, sizes = as_trades(schedule)
    depth, r, y_before, y_after = _trade_terms(pattern, times, sizes, eta0)
    contrib = sizes * (y_before / r + sizes / (2 * depth))
    eta0_part = eta0 * float(np.sum(sizes / r))
    impact = float(np.sum(sizes * ((y_before - eta0) / r + sizes / (2 * depth))))
    path = MarkupPath(pattern, eta0, times, y_before / r, y_after / r)
    y_used = schedule.multiplier if isinstance(schedule, Schedule) else None
    foc = None
    if check_foc and not pattern.zero_resilience:
        foc = foc_report(pattern, np.column_stack([times, sizes]), eta0, y=y_used, resolution=resolution)
        y_used = foc.y
    return CostReport(float(contrib.sum()), path, eta0_part, impact, contrib, y_used, foc)


def discounted_cost(pattern: LiquidityPattern, schedule, eta0: float | None = None, discount=0.0) -> float:
    """Execution cost with each trade's contribution discounted by ``exp(-int_0^t discount)``."""
    eta0 = pattern.eta0 if eta0 is None else float(eta0)
    times, sizes = as_trades(schedule)
    depth, r, y_before, _ = _trade_terms(pattern, times, sizes, eta0)
    rbar = np.broadcast_to(np.asarray(discount, dtype=float), pattern.times.shape)
    factor = np.exp(-np.atleast_1d(_cumulative(pattern.times, rbar, times)))
    return float(np.sum(factor * sizes * (y_before / r + sizes / (2 * depth))))


def x_to_y(pattern: LiquidityPattern, schedule, eta0: float | None = None) -> IncreasingPath:
    """``Y_t = eta0 + sum_{s <= t} dX_s / lambda_s``, i.e. ``rho`` times the mark-up."""
    eta0 = pattern.eta0 if eta0 is None else float(eta0)
    times, sizes = as_trades(schedule)
    lam = np.atleast_1d(pattern.depth_at(times)) / np.atleast_1d(rho(pattern, times))
    if np.any(lam <= 0):
        raise DivisionByZeroDepth("schedule trades where resilience-adjusted depth is zero")
    return IncreasingPath(times, eta0 + np.cumsum(sizes / lam), eta0)


def y_to_x(pattern: LiquidityPattern, Y: IncreasingPath) -> Schedule:
    """``X_t = sum_{s <= t} lambda_s dY_s``."""
    dY = Y.increments
    lam = np.atleast_1d(pattern.depth_at(Y.times)) / np.atleast_1d(rho(pattern, Y.times))
    if np.any((lam <= 0) & (dY > 0)):
        raise DivisionByZeroDepth("Y increases where resilience-adjusted depth is zero")
    trades = lam * dY
    return Schedule(Y.times, trades, Y.values, float("nan"), Y.initial)


def _kappa_at(kappa, times) -> np.ndarray:
    if isinstance(kappa, LiquidityPattern):
        return np.atleast_1d(kappa.depth_at(times)) / np.atleast_1d(rho(kappa, times)) ** 2
    return np.broadcast_to(np.asarray(kappa, dtype=float), np.shape(times))


def k_functional(Y: IncreasingPath, kappa) -> float:
    """``K(Y) = 1/2 sum kappa_t (Y_t**2 - Y_{t-}**2)``.

    ``kappa`` is a pattern or an array aligned with ``Y.times``.
    """
    prev = np.concatenate([[Y.initial], Y.values[:-1]])
    return float(0.5 * np.sum(_kappa_at(kappa, Y.times) * (Y.values**2 - prev**2)))


def k_tilde_functional(Y: IncreasingPath, kappa_tilde) -> float:
    """Convexified functional; ``kappa_tilde`` aligned with ``Y.times``."""
    return k_functional(Y, kappa_tilde)


def y_on_grid(pattern: LiquidityPattern, schedule, grid: LiquidityGrid, eta0: float | None = None) -> np.ndarray:
    """Value of ``Y`` after each grid sample.

    A trade is attributed to the last sample whose ``rho`` does not exceed the
    ``rho`` at the trade, so trades anywhere in a merged flat-``rho`` stretch
    land on that stretch's sample.
    """
    Y = x_to_y(pattern, schedule, eta0)
    r = np.atleast_1d(rho(pattern, Y.times))
    idx = np.searchsorted(grid.rho, r, side="right") - 1
    if np.any(idx < 0):
        raise ValueError("trade before the first grid sample")
    out = np.zeros(grid.size)
    np.add.at(out, idx, Y.increments)
    return Y.initial + np.cumsum(out)


def foc_residuals(Y, kappa_tilde, lambda_tilde, y: float) -> np.ndarray:
    """``-int_{[t_i, inf)} Y dkappa_tilde - y * lambda_tilde_i`` at each grid time.

    ``Y[i]`` is the value on ``[t_i, t_{i+1})`` and ``kappa_tilde`` drops from
    ``kappa_tilde[i]`` to ``kappa_tilde[i+1]`` over that stretch (to zero after
    the last time); the mass at ``t_i`` itself is included.
    """
    Y = np.asarray(Y, dtype=float)
    kt = np.asarray(kappa_tilde, dtype=float)
    drop = kt - np.append(kt[1:], 0.0)
    tail = np.cumsum((Y * drop)[::-1])[::-1]
    return tail - y * np.asarray(lambda_tilde, dtype=float)


def foc_report(
    pattern: LiquidityPattern,
    schedule,
    eta0: float | None = None,
    *,
    y: float | None = None,
    envelope: EnvelopeResult | None = None,
    resolution: int = 1000,
) -> FocReport:
    """First-order residuals of ``schedule`` on the pattern's envelope grid.

    If ``y`` is not given it is fitted by least squares on the points of
    increase, where an optimal schedule has zero residual.
    """
    eta0 = pattern.eta0 if eta0 is None else float(eta0)
    env = envelope if envelope is not None else compute_envelope(pattern, resolution)
    times = env.grid.times
    Y = y_on_grid(pattern, schedule, env.grid, eta0)
    increase = np.diff(Y, prepend=eta0) > 0
    if y is None or not np.isfinite(y):
        base = foc_residuals(Y, env.kappa_tilde, env.lambda_tilde, 0.0)
        lt = env.lambda_tilde[increase]
        y = float(np.dot(base[increase], lt) / np.dot(lt, lt)) if lt.size and np.any(lt > 0) else 0.0
    res = foc_residuals(Y, env.kappa_tilde, env.lambda_tilde, y)
    return FocReport(times, res, increase, float(y))
