"""Independent checks: discrete quadratic form, brute force, projected gradient, closed form.

For an atomic pattern with trades ``d_i >= 0`` at its nodes the execution cost
expands to ``c @ d + d @ G @ d / 2`` with ``G_ij = rho_lo / (delta_lo * rho_hi)``
(``lo = min(i, j)``, ``hi = max(i, j)``) and ``c_i = eta0 / rho_i``.  Nothing in
this module goes through the envelope construction.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .exceptions import InvalidParams, NoConvergence, PatternError, TooLarge, ZeroDepthNode
from .pattern import LiquidityPattern, PatternKind, _cumulative, rho
from .scheduler import Schedule

__all__ = [
    "DiscreteCostForm",
    "LatticeResult",
    "PGResult",
    "OWSolution",
    "ConvexityReport",
    "cost_matrix",
    "brute_force",
    "lattice_bound",
    "projected_gradient",
    "project_simplex",
    "ow_closed_form",
    "convexity_check",
]

MAX_BRUTE_FORCE_NODES = 6


@dataclass(frozen=True, eq=False)
class DiscreteCostForm:
    G: np.ndarray
    c: np.ndarray
    times: np.ndarray

    @property
    def n(self) -> int:
        return self.c.size

    def cost(self, d) -> np.ndarray | float:
        """Cost of allocation(s) ``d`` (last axis indexes nodes)."""
        d = np.asarray(d, dtype=float)
        out = d @ self.c + 0.5 * np.einsum("...i,ij,...j->...", d, self.G, d)
        return float(out) if np.ndim(out) == 0 else out

    def gradient(self, d) -> np.ndarray:
        return self.c + self.G @ d


def cost_matrix(pattern: LiquidityPattern, eta0: float | None = None, discount=None) -> DiscreteCostForm:
    """Quadratic cost form of an atomic pattern; optionally with discounting.

    With a discount rate each trade's contribution is weighted by
    ``exp(-int_0^t discount)``.  The weight of a cross term is that of the later
    trade, which is the one paying for the earlier trade's impact.
    """
    if pattern.kind is not PatternKind.ATOMIC:
        raise PatternError("the discrete cost form needs an atomic pattern")
    eta0 = pattern.eta0 if eta0 is None else float(eta0)
    delta = pattern.depth
    if np.any(delta <= 0):
        raise ZeroDepthNode("every node needs positive depth")
    r = rho(pattern, pattern.times)
    if discount is None:
        w = np.ones(pattern.n)
    else:
        rbar = np.broadcast_to(np.asarray(discount, dtype=float), pattern.times.shape)
        w = np.exp(-_cumulative(pattern.times, rbar, pattern.times))
    idx = np.arange(pattern.n)
    lo = np.minimum.outer(idx, idx)
    hi = np.maximum.outer(idx, idx)
    G = w[hi] * r[lo] / (delta[lo] * r[hi])
    return DiscreteCostForm(G, w * eta0 / r, pattern.times.copy())


class LatticeResult(NamedTuple):
    allocation: np.ndarray
    cost: float
    bound: float
    steps: int


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    rows = np.zeros((1, 0), dtype=np.int32)
    rem = np.array([total])
    for _ in range(parts - 1):
        counts = rem + 1
        rep = np.repeat(np.arange(rows.shape[0]), counts)
        starts = np.cumsum(counts) - counts
        vals = np.arange(counts.sum()) - np.repeat(starts, counts)
        rows = np.column_stack([rows[rep], vals]).astype(np.int32)
        rem = rem[rep] - vals
    return np.column_stack([rows, rem]).astype(np.int32)


def lattice_bound(form: DiscreteCostForm, x: float, steps: int) -> float:
    """Certified gap between the lattice minimum and the true simplex minimum.

    Rounding the true minimiser to the lattice moves it by at most ``n * h`` in
    the l1 norm (``h = x / steps``), and the gradient is bounded on the simplex by
    ``max|c| + max|G| * x`` in the sup norm.
    """
    lip = np.max(np.abs(form.c)) + np.max(np.abs(form.G)) * x
    return float(lip * form.n * x / steps)


def brute_force(
    form: DiscreteCostForm,
    x: float,
    steps: int = 1000,
    *,
    max_points: int = 1_000_000,
    jobs: int = 1,
    chunk: int = 200_000,
) -> LatticeResult:
    """Exhaustive minimum over the lattice ``{d >= 0, sum d = x}`` with spacing ``x/steps``.

    ``steps`` is reduced until the lattice has at most ``max_points`` points; the
    returned ``steps`` and ``bound`` refer to the lattice actually searched.
    """
    n = form.n
    if n > MAX_BRUTE_FORCE_NODES:
        raise TooLarge(f"brute force supports at most {MAX_BRUTE_FORCE_NODES} nodes, got {n}")
    steps = int(steps)
    while steps > 1 and math.comb(steps + n - 1, n - 1) > max_points:
        steps -= 1
    comps = _compositions(steps, n)
    h = x / steps

    def best(block):
        d = block * h
        vals = form.cost(d)
        k = int(np.argmin(vals))
        return vals[k], d[k]

    blocks = [comps[i : i + chunk] for i in range(0, comps.shape[0], chunk)]
    if jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(best, blocks))
    else:
        results = [best(b) for b in blocks]
    val, alloc = min(results, key=lambda r: r[0])
    return LatticeResult(alloc, float(val), lattice_bound(form, x, steps), steps)


def project_simplex(v, x: float) -> np.ndarray:
    """Euclidean projection onto ``{d >= 0, sum d = x}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - x
    k = np.arange(1, v.size + 1)
    cond = u - css / k > 0
    r = k[cond][-1]
    theta = css[r - 1] / r
    return np.maximum(v - theta, 0.0)


class PGResult(NamedTuple):
    allocation: np.ndarray
    cost: float
    iterations: int
    kkt: float


def _spectral_norm(G: np.ndarray, iters: int = 500) -> float:
    v = np.ones(G.shape[0]) / math.sqrt(G.shape[0])
    est = 0.0
    for _ in range(iters):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(nw - est) <= 1e-12 * nw:
            break
        est = nw
    return float(nw)


def _kkt(form: DiscreteCostForm, d: np.ndarray, x: float) -> float:
    return float(np.max(np.abs(d - project_simplex(d - form.gradient(d), x))))


def projected_gradient(
    form: DiscreteCostForm,
    x: float,
    start=None,
    *,
    tol: float = 1e-8,
    max_iter: int = 100_000,
) -> PGResult:
    """Projected gradient descent with step ``1/||G||`` on the simplex of volume ``x``.

    Converges to the unique minimiser when ``G`` is positive definite.
    Terminates when the projected-gradient residual is below ``tol``.
    """
    if form.n > 500:
        raise TooLarge("projected gradient supports at most 500 nodes")
    d = np.full(form.n, x / form.n) if start is None else project_simplex(start, x)
    step = 1.0 / max(_spectral_norm(form.G), 1e-300)
    for it in range(max_iter + 1):
        res = _kkt(form, d, x)
        if res <= tol:
            return PGResult(d, form.cost(d), it, res)
        if it == max_iter:
            break
        d = project_simplex(d - step * form.gradient(d), x)
    raise NoConvergence(f"projected gradient stalled at residual {res:.3g} after {max_iter} iterations")


@dataclass(frozen=True)
class OWSolution:
    """Closed-form schedule for constant depth on ``[0, T]`` and constant resilience.

    Blocks at ``0`` and ``T`` and a constant buying rate on ``(start, T)``.
    """

    depth: float
    resilience: float
    horizon: float
    eta0: float
    multiplier: float
    initial_block: float
    terminal_block: float
    rate: float
    start: float

    @property
    def total(self) -> float:
        return self.initial_block + self.rate * (self.horizon - self.start) + self.terminal_block

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        out = (
            np.where(t >= 0, self.initial_block, 0.0)
            + self.rate * np.clip(np.minimum(t, self.horizon) - self.start, 0.0, None)
            + np.where(t >= self.horizon, self.terminal_block, 0.0)
        )
        return float(out) if out.ndim == 0 else out

    @property
    def cost(self) -> float:
        d0, r0, T, e0, y = self.depth, self.resilience, self.horizon, self.eta0, self.multiplier
        y0 = max(y / 2, e0)
        y_pre = max(y * math.exp(r0 * T) / 2, e0)
        y_T = max(y * math.exp(r0 * T), e0)
        cont = d0 * y * y * r0 * (T - self.start) / 2
        return 0.5 * (d0 * (y0**2 - e0**2) + cont + d0 * math.exp(-2 * r0 * T) * (y_T**2 - y_pre**2))

    def sample(self, resolution: int = 1000) -> Schedule:
        """Discretise on ``resolution`` equal steps; continuous buying is lumped at step ends."""
        s = np.linspace(0.0, self.horizon, resolution + 1)
        X = self.cumulative(s)
        trades = np.diff(X, prepend=0.0)
        return Schedule(s, trades, np.full(s.size, np.nan), self.multiplier, self.eta0)


def _ow_pieces(d0, r0, T, e0, y):
    """(initial block, rate, start, terminal block) for multiplier ``y``."""
    low = e0 * math.exp(-r0 * T)
    if y <= low:
        return 0.0, 0.0, T, 0.0
    if y <= 2 * low:
        # frontier first exceeds eta0 at T: a single terminal block
        return 0.0, 0.0, T, d0 * (y - low)
    start = max(math.log(2 * e0 / y) / r0, 0.0) if e0 > 0 else 0.0
    start = min(start, T)
    return d0 * max(y / 2 - e0, 0.0), y * d0 * r0 / 2, start, d0 * y / 2


def ow_closed_form(depth: float, resilience: float, horizon: float, x: float, eta0: float = 0.0) -> OWSolution:
    """Optimal schedule for constant depth ``depth`` on ``[0, horizon]`` and resilience ``resilience``."""
    d0, r0, T, e0 = float(depth), float(resilience), float(horizon), float(eta0)
    if not (d0 > 0 and r0 > 0 and 0 < T < math.inf and x > 0 and e0 >= 0):
        raise InvalidParams("need depth > 0, resilience > 0, 0 < horizon < inf, x > 0, eta0 >= 0")

    def total(y):
        a, rate, s, b = _ow_pieces(d0, r0, T, e0, y)
        return a + rate * (T - s) + b

    if e0 == 0:
        y = x / (d0 * (1 + r0 * T / 2))
    else:
        hi = max(1.0, 2 * e0)
        while total(hi) < x:
            hi *= 2
        y = brentq(lambda v: total(v) - x, e0 * math.exp(-r0 * T), hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    a, rate, s, b = _ow_pieces(d0, r0, T, e0, y)
    return OWSolution(d0, r0, T, e0, y, a, b, rate, s)


class ConvexityReport(NamedTuple):
    definiteness: str  # "pd", "psd" (singular) or "indefinite"
    kappa_decreasing: bool
    kappa_strictly_decreasing: bool

    @property
    def is_psd(self) -> bool:
        return self.definiteness in ("pd", "psd")


def convexity_check(form: DiscreteCostForm, kappa, *, rtol: float = 1e-10) -> ConvexityReport:
    """Definiteness of ``G`` from an LDL^T factorisation next to a direct scan of ``kappa``."""
    _, D, _ = scipy.linalg.ldl(form.G)
    eig = np.linalg.eigvalsh(D)  # D is block diagonal with 1x1 / 2x2 blocks
    scale = max(np.max(np.abs(eig)), 1e-300)
    if np.all(eig > rtol * scale):
        kind = "pd"
    elif np.all(eig >= -rtol * scale):
        kind = "psd"
    else:
        kind = "indefinite"
    dk = np.diff(np.asarray(kappa, dtype=float))
    return ConvexityReport(kind, bool(np.all(dk <= 0)), bool(np.all(dk < 0)))
