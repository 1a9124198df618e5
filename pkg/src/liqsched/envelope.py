"""Decreasing envelope, time-changed depth curve and its concave envelope.

On a grid of trading opportunities the construction reads

* ``lambda_tilde``: running maximum of ``lambda = delta/rho`` taken from the right;
* ``kappa_tilde = lambda_tilde / rho``, nonincreasing in time;
* the curve ``k -> Lambda_tilde(k)`` through the points ``(kappa_tilde_i,
  lambda_tilde_i)`` and the origin.  Between these points the exact curve is
  flat or runs along a ray through the origin, so it lies below the chords and
  the node points alone determine the concave envelope;
* the concave envelope ``Lambda_hat`` (upper hull) and its left-continuous,
  decreasing density, whose squared L2 norm calibrates the schedule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pattern import (
    Continuity,
    Direction,
    LiquidityGrid,
    LiquidityPattern,
    MonotoneStepCurve,
    merge_flat_rho,
    sample_grid,
)

__all__ = [
    "EnvelopeResult",
    "decreasing_envelope",
    "time_changed_curve",
    "concave_envelope",
    "density",
    "l2_norm_sq",
    "compute_envelope",
    "signal",
    "verify_signal_identity",
]


def decreasing_envelope(lam) -> np.ndarray:
    """Smallest nonincreasing majorant: ``out[i] = max(lam[i:])``."""
    lam = np.asarray(lam, dtype=float)
    return np.maximum.accumulate(lam[::-1])[::-1]


def time_changed_curve(grid: LiquidityGrid, lambda_tilde) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points of ``Lambda_tilde`` sorted by ``k``, starting at the origin.

    Returns ``(k, value, source_time)``; the origin carries ``nan`` as its time.
    Nodes with ``lambda_tilde == 0`` collapse onto the origin.  When several
    nodes share a ``k`` the earliest one is kept.
    """
    lt = np.asarray(lambda_tilde, dtype=float)
    kt = lt / grid.rho
    pos = np.flatnonzero(lt > 0)[::-1]  # latest first, i.e. ascending k
    k, v, t = kt[pos], lt[pos], grid.times[pos]
    if k.size > 1:
        # equal k -> keep the last in ascending order, which is the earliest time
        last = np.append(k[1:] != k[:-1], True)
        k, v, t = k[last], v[last], t[last]
    return (
        np.concatenate([[0.0], k]),
        np.concatenate([[0.0], v]),
        np.concatenate([[np.nan], t]),
    )


def concave_envelope(k, value) -> np.ndarray:
    """Indices of the vertices of the upper concave hull.

    Single monotone-chain pass over points sorted by ``k``.  Collinear points are
    dropped, so consecutive hull slopes are strictly decreasing.
    """
    k = np.asarray(k, dtype=float)
    v = np.asarray(value, dtype=float)
    hull: list[int] = []
    for i in range(k.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (k[b] - k[a]) * (v[i] - v[a]) - (k[i] - k[a]) * (v[b] - v[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def density(hull_k, hull_value) -> MonotoneStepCurve:
    """Left-continuous slope of the piecewise-linear hull, as a step curve in ``k``.

    The value at ``k = 0`` is the right limit there (the first slope).
    """
    hk = np.asarray(hull_k, dtype=float)
    hv = np.asarray(hull_value, dtype=float)
    if hk.size < 2:
        raise ValueError("hull needs at least two vertices")
    slopes = np.diff(hv) / np.diff(hk)
    return MonotoneStepCurve(hk[1:], slopes, Continuity.LEFT, Direction.DECREASING)


def l2_norm_sq(dens: MonotoneStepCurve) -> float:
    """``int_0^K density(k)**2 dk`` for a density produced by :func:`density`."""
    widths = np.diff(np.concatenate([[0.0], dens.breakpoints]))
    return float(np.sum(dens.values**2 * widths))


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    grid: LiquidityGrid
    lambda_tilde: np.ndarray
    kappa_tilde: np.ndarray
    curve_k: np.ndarray
    curve_value: np.ndarray
    curve_time: np.ndarray
    hull: np.ndarray
    density: MonotoneStepCurve
    l2_sq: float

    @property
    def hull_k(self) -> np.ndarray:
        return self.curve_k[self.hull]

    @property
    def hull_value(self) -> np.ndarray:
        return self.curve_value[self.hull]

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(self.l2_sq))

    def concave_hull_at(self, k):
        """Concave envelope ``Lambda_hat`` evaluated at ``k``."""
        return np.interp(k, self.hull_k, self.hull_value)

    def unit_frontier(self) -> np.ndarray:
        """Density composed with ``kappa_tilde`` at each grid time (frontier for ``y = 1``)."""
        return self.density(self.kappa_tilde)

    def lambda_tilde_curve(self) -> MonotoneStepCurve:
        return MonotoneStepCurve(
            self.grid.times, self.lambda_tilde, Continuity.LEFT, Direction.DECREASING, fill=0.0
        )


def _grid(source, resolution) -> LiquidityGrid:
    grid = source if isinstance(source, LiquidityGrid) else sample_grid(source, resolution)
    return merge_flat_rho(grid)


def compute_envelope(source: LiquidityPattern | LiquidityGrid, resolution: int = 1000) -> EnvelopeResult:
    """Run the envelope construction on a pattern (sampled at ``resolution``) or a grid.

    Samples sharing the same ``rho`` are merged first (see :func:`merge_flat_rho`).
    """
    grid = _grid(source, resolution)
    lt = decreasing_envelope(grid.lam)
    kt = lt / grid.rho
    k, v, t = time_changed_curve(grid, lt)
    hull = concave_envelope(k, v)
    dens = density(k[hull], v[hull])
    return EnvelopeResult(
        grid=grid,
        lambda_tilde=lt,
        kappa_tilde=kt,
        curve_k=k,
        curve_value=v,
        curve_time=t,
        hull=hull,
        density=dens,
        l2_sq=l2_norm_sq(dens),
    )


def signal(source: LiquidityPattern | LiquidityGrid, resolution: int = 1000, block: int = 512) -> np.ndarray:
    """Trading signal ``L*`` at every grid time by direct pairwise evaluation.

    ``L*_i = min_{u > t_i} (lt_u - lt_i) / (lt_u/rho_u - lt_i/rho_i)`` with
    ``0/0 = 0``.  Between grid times the ratio is monotone, and past the last
    time ``lambda_tilde`` vanishes, so the grid nodes plus one point beyond the
    horizon (contributing ``rho_i``) exhaust the infimum.  Quadratic in the grid
    size; rows are processed in blocks to bound memory.
    """
    grid = _grid(source, resolution)
    lt = decreasing_envelope(grid.lam)
    kt = lt / grid.rho
    n = lt.size
    out = np.zeros(n)
    cols = np.arange(n)
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        num = lt[None, :] - lt[rows, None]
        den = kt[None, :] - kt[rows, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(num == 0, 0.0, num / den)
        ratio = np.where(cols[None, :] > rows[:, None], ratio, np.inf)
        beyond = np.where(lt[rows] > 0, grid.rho[rows], 0.0)
        out[rows] = np.minimum(ratio.min(axis=1), beyond)
    return out


def verify_signal_identity(signal_values, dens: MonotoneStepCurve, kappa_tilde) -> float:
    """Largest gap between the running maximum of ``L*`` and ``density(kappa_tilde)``."""
    running = np.maximum.accumulate(np.asarray(signal_values, dtype=float))
    return float(np.max(np.abs(running - dens(np.asarray(kappa_tilde, dtype=float)))))
