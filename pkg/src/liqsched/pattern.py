"""Liquidity patterns: market depth and resilience on a finite time grid.

Two kinds of pattern are supported:

``ATOMIC``
    depth is available only at the grid nodes (point masses), zero elsewhere.
    The whole pipeline is exact for these.
``PIECEWISE_CONSTANT``
    depth ``delta_i * exp(growth_i * (t - t_i))`` on ``[t_i, t_{i+1})``, the last
    cell running up to the horizon (inclusive).  Depth at a cell boundary is the
    larger of the two one-sided values, which keeps it upper-semicontinuous.
    These are handled by sampling every cell at ``resolution`` steps.

Resilience is piecewise constant on the same cells in both cases; the last
cell extends to infinity.  The cumulative resilience ``rho`` is evaluated in
closed form.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from .exceptions import EmptyMarket, NegativeValue, NonMonotoneGrid, PatternError

__all__ = [
    "PatternKind",
    "Continuity",
    "Direction",
    "LiquidityPattern",
    "LiquidityGrid",
    "MonotoneStepCurve",
    "validate",
    "rho",
    "lambda_kappa",
    "apply_discount",
    "collapse_zero_resilience",
    "merge_flat_rho",
    "trading_grid",
    "zero_resilience_runs",
    "sample_grid",
]


class PatternKind(str, enum.Enum):
    ATOMIC = "atomic"
    PIECEWISE_CONSTANT = "piecewise_constant"

    @classmethod
    def parse(cls, value: "PatternKind | str") -> "PatternKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {
            "atomic": cls.ATOMIC,
            "piecewise_constant": cls.PIECEWISE_CONSTANT,
            "piecewiseconstant": cls.PIECEWISE_CONSTANT,
            "pwc": cls.PIECEWISE_CONSTANT,
        }
        try:
            return aliases[key]
        except KeyError:
            raise PatternError(f"unknown pattern kind {value!r}") from None


class Continuity(str, enum.Enum):
    RIGHT = "right"
    LEFT = "left"


class Direction(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MonotoneStepCurve:
    """Monotone piecewise-constant function.

    With ``RIGHT`` continuity the value ``values[i]`` holds on
    ``[breakpoints[i], breakpoints[i+1])`` and ``fill`` is used left of the first
    breakpoint.  With ``LEFT`` continuity ``values[i]`` holds on
    ``(breakpoints[i-1], breakpoints[i]]``, ``values[0]`` at and below the first
    breakpoint, and ``fill`` right of the last one.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    continuity: Continuity
    direction: Direction
    fill: float | None = None

    def __post_init__(self):
        b = _frozen(self.breakpoints)
        v = _frozen(self.values)
        if b.ndim != 1 or b.shape != v.shape or b.size == 0:
            raise ValueError("breakpoints and values must be non-empty 1-d arrays of equal length")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        cont = Continuity(self.continuity)
        direc = Direction(self.direction)
        fill = self.fill
        if fill is None:
            fill = float(v[0] if cont is Continuity.RIGHT else v[-1])
        seq = np.concatenate([[fill], v]) if cont is Continuity.RIGHT else np.concatenate([v, [fill]])
        d = np.diff(seq)
        if direc is Direction.INCREASING and np.any(d < 0) or direc is Direction.DECREASING and np.any(d > 0):
            raise ValueError(f"values are not {direc.value}")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "continuity", cont)
        object.__setattr__(self, "direction", direc)
        object.__setattr__(self, "fill", float(fill))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        b, v = self.breakpoints, self.values
        if self.continuity is Continuity.RIGHT:
            idx = np.searchsorted(b, x, side="right") - 1
            out = np.where(idx < 0, self.fill, v[np.clip(idx, 0, None)])
        else:
            idx = np.searchsorted(b, x, side="left")
            out = np.where(idx >= b.size, self.fill, v[np.clip(idx, None, b.size - 1)])
        return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class LiquidityPattern:
    """Deterministic liquidity pattern with trading target and initial mark-up.

    Parameters
    ----------
    kind : PatternKind or str
    times : array_like
        Strictly increasing grid starting at 0.
    depth : array_like
        Nonnegative market depth per node (atomic) or per cell.
    resilience : array_like
        Nonnegative resilience rate per cell; the last cell extends to infinity.
    horizon : float, optional
        Depth vanishes after the horizon.  Defaults to the last grid time.
    eta0 : float
        Initial mark-up.
    target : float
        Number of shares to buy.
    growth : array_like, optional
        Exponential depth growth rate per cell (piecewise-constant patterns
        only).  Produced by :func:`apply_discount`; zero by default.
    """

    kind: PatternKind
    times: np.ndarray
    depth: np.ndarray
    resilience: np.ndarray
    horizon: float | None = None
    eta0: float = 0.0
    target: float = 1.0
    growth: np.ndarray | None = field(default=None)

    def __post_init__(self):
        kind = PatternKind.parse(self.kind)
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        d = np.atleast_1d(np.asarray(self.depth, dtype=float))
        r = np.atleast_1d(np.asarray(self.resilience, dtype=float))
        if r.size == 1 and t.size > 1:
            r = np.full(t.size, r[0])
        g = np.zeros(t.size) if self.growth is None else np.atleast_1d(np.asarray(self.growth, dtype=float))
        if g.size == 1 and t.size > 1:
            g = np.full(t.size, g[0])
        if t.ndim != 1 or t.size == 0:
            raise PatternError("times must be a non-empty 1-d array")
        if not (d.shape == r.shape == g.shape == t.shape):
            raise PatternError(
                f"times, depth, resilience and growth must have equal length "
                f"(got {t.size}, {d.size}, {r.size}, {g.size})"
            )
        if not np.all(np.isfinite(t)):
            raise NonMonotoneGrid("times must be finite")
        if t[0] != 0.0:
            raise PatternError("the time grid must start at 0")
        if np.any(np.diff(t) <= 0):
            raise NonMonotoneGrid("times must be strictly increasing")
        for name, arr in (("depth", d), ("resilience", r)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise NegativeValue(f"{name} values must be finite and nonnegative")
        if not np.all(np.isfinite(g)):
            raise NegativeValue("growth values must be finite")
        horizon = float(t[-1]) if self.horizon is None else float(self.horizon)
        if not math.isfinite(horizon):
            raise NegativeValue("horizon must be finite")
        if horizon < t[-1]:
            raise PatternError(f"horizon {horizon} precedes the last grid time {t[-1]}")
        eta0, target = float(self.eta0), float(self.target)
        if not math.isfinite(eta0) or eta0 < 0:
            raise NegativeValue("eta0 must be finite and nonnegative")
        if not math.isfinite(target) or target <= 0:
            raise NegativeValue("target must be finite and positive")
        if kind is PatternKind.ATOMIC:
            g = np.zeros_like(g)
        elif np.any((g != 0) & (r == 0)):
            raise PatternError("depth growth is not supported on zero-resilience cells")
        if not np.any(d > 0):
            raise EmptyMarket("market depth vanishes identically")

        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "times", _frozen(t))
        object.__setattr__(self, "depth", _frozen(d))
        object.__setattr__(self, "resilience", _frozen(r))
        object.__setattr__(self, "growth", _frozen(g))
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "eta0", eta0)
        object.__setattr__(self, "target", target)
        if kind is PatternKind.PIECEWISE_CONSTANT and not np.any(d[self._active_cells()] > 0):
            raise EmptyMarket("market depth vanishes on the trading horizon")

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def cell_ends(self) -> np.ndarray:
        """Right end of each cell; the last one is the horizon."""
        return np.append(self.times[1:], self.horizon)

    def _active_cells(self) -> np.ndarray:
        """Cells whose resilience affects trading (nonempty overlap with the horizon)."""
        if self.kind is PatternKind.ATOMIC:
            mask = np.ones(self.n, dtype=bool)
            mask[-1] = False
            return mask
        mask = self.cell_ends > self.times
        return mask

    @property
    def zero_resilience(self) -> bool:
        """True when ``rho`` is constant over the whole trading horizon."""
        return not np.any(self.resilience[self._active_cells()] > 0)

    def replace(self, **changes) -> "LiquidityPattern":
        return replace(self, **changes)

    def depth_at(self, t) -> np.ndarray | float:
        """Market depth at time(s) ``t`` (upper-semicontinuous version)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros(t.shape)
        if self.kind is PatternKind.ATOMIC:
            idx = np.clip(np.searchsorted(self.times, t), 0, self.n - 1)
            for cand in (idx, np.clip(idx - 1, 0, None)):
                hit = np.abs(self.times[cand] - t) <= 1e-12 * np.maximum(1.0, np.abs(t))
                out = np.where(hit & (out == 0), self.depth[cand], out)
        else:
            inside = (t >= 0) & (t <= self.horizon)
            i = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.n - 1)
            val = self.depth[i] * np.exp(self.growth[i] * (t - self.times[i]))
            at_node = (t == self.times[i]) & (i > 0)
            j = np.clip(i - 1, 0, None)
            left = self.depth[j] * np.exp(self.growth[j] * (self.times[i] - self.times[j]))
            val = np.where(at_node, np.maximum(val, left), val)
            out = np.where(inside, val, 0.0)
        return float(out[0]) if scalar else out

    def to_dict(self) -> dict[str, Any]:
        d = {
            "kind": self.kind.value,
            "times": self.times.tolist(),
            "depth": self.depth.tolist(),
            "resilience": self.resilience.tolist(),
            "horizon": self.horizon,
            "eta0": self.eta0,
            "target": self.target,
        }
        if np.any(self.growth != 0):
            d["growth"] = self.growth.tolist()
        return d


def validate(raw: "LiquidityPattern | Mapping[str, Any]") -> LiquidityPattern:
    """Build a validated :class:`LiquidityPattern` from a mapping.

    Raises :class:`EmptyMarket`, :class:`NonMonotoneGrid` or
    :class:`NegativeValue` when the corresponding invariant fails.
    """
    if isinstance(raw, LiquidityPattern):
        return raw
    if not isinstance(raw, Mapping):
        raise PatternError(f"cannot build a pattern from {type(raw).__name__}")
    data = dict(raw)
    missing = {"times", "depth", "resilience"} - data.keys()
    if missing:
        raise PatternError(f"pattern is missing fields: {sorted(missing)}")
    allowed = {"kind", "times", "depth", "resilience", "horizon", "eta0", "target", "growth"}
    unknown = data.keys() - allowed
    if unknown:
        raise PatternError(f"unknown pattern fields: {sorted(unknown)}")
    data.setdefault("kind", PatternKind.ATOMIC)
    return LiquidityPattern(**data)


def _cumulative(times: np.ndarray, rates: np.ndarray, t) -> np.ndarray:
    """Integral of a piecewise-constant rate from 0 to ``t``; last cell unbounded."""
    t = np.asarray(t, dtype=float)
    node = np.concatenate([[0.0], np.cumsum(rates[:-1] * np.diff(times))])
    i = np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 1)
    return np.where(t <= 0, 0.0, node[i] + rates[i] * (t - times[i]))


def rho(pattern: LiquidityPattern, t):
    """Cumulative resilience ``exp(int_0^t r)``; exact for piecewise-constant ``r``."""
    out = np.exp(_cumulative(pattern.times, pattern.resilience, t))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class LiquidityGrid:
    """Pattern sampled at its trading opportunities: times, depth and ``rho``.

    ``step`` is the length of the stretch of continuous trading each sample
    stands for (zero for genuine atoms).
    """

    times: np.ndarray
    depth: np.ndarray
    rho: np.ndarray
    kind: PatternKind
    step: np.ndarray | None = None

    def __post_init__(self):
        if self.step is None:
            object.__setattr__(self, "step", np.zeros(np.shape(self.times)))

    @property
    def lam(self) -> np.ndarray:
        return self.depth / self.rho

    @property
    def kappa(self) -> np.ndarray:
        return self.depth / self.rho**2

    @property
    def size(self) -> int:
        return self.times.size


def sample_grid(pattern: LiquidityPattern, resolution: int = 1000) -> LiquidityGrid:
    """Trading opportunities of ``pattern``.

    Atomic patterns give their nodes.  A piecewise-constant cell with positive
    resilience is sampled at ``resolution + 1`` equally spaced times including
    both ends; with constant resilience this spaces ``kappa`` geometrically.  A
    zero-resilience cell contributes its left end only, since ``rho`` is flat
    there and the earliest point of maximal depth is as good as any other.
    Samples falling on the same time are merged by taking the larger depth, and
    zero-depth samples are dropped.
    """
    if pattern.kind is PatternKind.ATOMIC:
        t = pattern.times
        return LiquidityGrid(t, pattern.depth, rho(pattern, t), pattern.kind)
    resolution = int(resolution)
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    ts, ds, hs = [], [], []
    ends = pattern.cell_ends
    for i in range(pattern.n):
        t0, t1 = pattern.times[i], ends[i]
        if t1 > t0 and pattern.resilience[i] > 0:
            s = np.linspace(t0, t1, resolution + 1)
            h = np.full(s.size, (t1 - t0) / resolution)
            h[0] = 0.0
        else:
            s = np.array([t0])
            h = np.zeros(1)
        ts.append(s)
        hs.append(h)
        ds.append(pattern.depth[i] * np.exp(pattern.growth[i] * (s - t0)))
    times, inv = np.unique(np.concatenate(ts), return_inverse=True)
    depth = np.zeros(times.size)
    step = np.zeros(times.size)
    np.maximum.at(depth, inv, np.concatenate(ds))
    np.maximum.at(step, inv, np.concatenate(hs))
    keep = depth > 0
    times, depth, step = times[keep], depth[keep], step[keep]
    # a sample whose predecessor was dropped starts a new stretch of depth
    prev_kept = np.concatenate([[False], np.diff(np.flatnonzero(keep)) == 1])
    step = np.where(prev_kept, step, 0.0)
    return LiquidityGrid(times, depth, rho(pattern, times), pattern.kind, step)


def lambda_kappa(pattern: LiquidityPattern, resolution: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Resilience-adjusted depth ``delta/rho`` and ``delta/rho**2`` on the sample grid."""
    grid = sample_grid(pattern, resolution)
    return grid.lam, grid.kappa


def apply_discount(pattern: LiquidityPattern, discount) -> LiquidityPattern:
    """Fold a discount rate into depth and resilience.

    Discounting costs at rate ``discount`` is the same as scaling depth by
    ``exp(int_0^t discount)`` and adding ``discount`` to the resilience.  For
    piecewise-constant patterns the scaling inside a cell is carried by
    ``growth``.  ``discount`` is a scalar or one rate per cell.
    """
    rbar = np.broadcast_to(np.asarray(discount, dtype=float), pattern.times.shape)
    if not np.all(np.isfinite(rbar)) or np.any(rbar < 0):
        raise NegativeValue("discount rates must be finite and nonnegative")
    scale = np.exp(_cumulative(pattern.times, rbar, pattern.times))
    changes = dict(depth=pattern.depth * scale, resilience=pattern.resilience + rbar)
    if pattern.kind is PatternKind.PIECEWISE_CONSTANT:
        changes["growth"] = pattern.growth + rbar
    return pattern.replace(**changes)


def zero_resilience_runs(pattern: LiquidityPattern) -> list[tuple[int, int]]:
    """Maximal runs ``(a, b)`` of consecutive active cells ``a..b-1`` with zero resilience."""
    zero = (pattern.resilience == 0) & pattern._active_cells()
    runs, i = [], 0
    while i < pattern.n:
        if zero[i]:
            j = i
            while j < pattern.n and zero[j]:
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1
    return runs


def collapse_zero_resilience(pattern: LiquidityPattern) -> LiquidityPattern:
    """Replace every maximal zero-resilience run by one node carrying its maximal depth.

    ``rho`` is flat across a run of cells ``a..b-1`` without resilience, so all
    trading opportunities in it are interchangeable apart from their depth.  For
    piecewise-constant patterns the run becomes a single zero-resilience cell at
    ``t_a``.  For atomic patterns node ``b`` shares the same ``rho`` and joins the
    run, and the merged node gets the rate that keeps ``rho`` unchanged at the
    next remaining node.  A pattern without any resilience is returned as the
    atomic pattern on its nodes.  Idempotent.
    """
    if pattern.zero_resilience:
        if pattern.kind is PatternKind.ATOMIC:
            return pattern
        return pattern.replace(kind=PatternKind.ATOMIC, growth=None)
    t, d, r, g = pattern.times, pattern.depth, pattern.resilience, pattern.growth
    keep = np.ones(pattern.n, dtype=bool)
    depth, res = d.copy(), r.copy()
    atomic = pattern.kind is PatternKind.ATOMIC
    for a, b in zero_resilience_runs(pattern):
        last = b if atomic else b - 1
        if last == a:
            continue
        depth[a] = d[a : last + 1].max()
        if atomic and last + 1 < pattern.n:
            res[a] = r[last] * (t[last + 1] - t[last]) / (t[last + 1] - t[a])
        else:
            res[a] = r[last]
        keep[a + 1 : last + 1] = False
    if keep.all():
        return pattern
    return pattern.replace(times=t[keep], depth=depth[keep], resilience=res[keep], growth=g[keep])


def merge_flat_rho(grid: LiquidityGrid) -> LiquidityGrid:
    """Merge consecutive samples with identical ``rho`` into one trading opportunity.

    Such samples are separated by zero resilience only, so the cheapest place to
    trade among them is the earliest one of maximal depth; the merged sample sits
    there.  A merged sample is an atom (``step == 0``).  Consecutive ``rho``
    values are compared exactly, which is sound because zero-resilience cells add
    exactly zero to the cumulative integral.
    """
    if grid.size < 2:
        return grid
    new_group = np.concatenate([[True], grid.rho[1:] != grid.rho[:-1]])
    if new_group.all():
        return grid
    gid = np.cumsum(new_group) - 1
    ngroups = int(gid[-1]) + 1
    order = np.lexsort((grid.times, -grid.depth, gid))
    best = order[np.searchsorted(gid[order], np.arange(ngroups))]
    sizes = np.bincount(gid)
    step = np.where(sizes > 1, 0.0, grid.step[best])
    return LiquidityGrid(grid.times[best], grid.depth[best], grid.rho[best], grid.kind, step)


def trading_grid(pattern: LiquidityPattern, resolution: int = 1000) -> LiquidityGrid:
    """Sample grid with flat-``rho`` stretches merged; the input of the envelope construction."""
    return merge_flat_rho(sample_grid(pattern, resolution))
