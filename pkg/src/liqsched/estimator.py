"""Estimator-style wrapper around the scheduling pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .cost import discounted_cost, execution_cost
from .envelope import compute_envelope
from .pattern import apply_discount
from .scheduler import optimal_schedule
from .validation import check_pattern, check_positive, check_resolution, default_resolution

__all__ = ["OptimalScheduler"]


class OptimalScheduler(BaseEstimator):
    """Fit the cost-minimal schedule for a liquidity pattern.

    Parameters
    ----------
    target : float, optional
        Shares to buy.  Defaults to the pattern's own target.
    eta0 : float, optional
        Initial mark-up.  Defaults to the pattern's own value.
    resolution : int, optional
        Samples per cell for piecewise-constant patterns.  Defaults to
        ``$LIQSCHED_RESOLUTION`` or 1000.
    report_threshold : float
        Block/rate classification multiplier.
    discount : float or array-like, optional
        Discount rate (scalar or per cell).  The schedule minimises discounted
        cost by solving the undiscounted problem for a transformed pattern.

    Attributes
    ----------
    pattern_ : LiquidityPattern
        Validated input pattern.
    envelope_ : EnvelopeResult or None
        Envelope of the (discount-transformed) pattern; ``None`` without resilience.
    multiplier_ : float
    schedule_ : Schedule
    cost_ : float
        Execution cost of ``schedule_`` on ``pattern_`` (discounted if ``discount`` is set).

    Examples
    --------
    >>> from liqsched import LiquidityPattern, OptimalScheduler
    >>> p = LiquidityPattern("atomic", [0, 1], [1, 1], [0.6931471805599453, 0])
    >>> OptimalScheduler().fit(p).schedule_.trades
    array([0.5, 0.5])
    """

    def __init__(self, target=None, eta0=None, resolution=None, report_threshold=10.0, discount=None):
        self.target = target
        self.eta0 = eta0
        self.resolution = resolution
        self.report_threshold = report_threshold
        self.discount = discount

    def fit(self, pattern, y=None):
        pattern = check_pattern(pattern)
        x = pattern.target if self.target is None else check_positive(self.target, "target")
        eta0 = pattern.eta0 if self.eta0 is None else check_positive(self.eta0, "eta0", allow_zero=True)
        m = default_resolution() if self.resolution is None else check_resolution(self.resolution)
        threshold = check_positive(self.report_threshold, "report_threshold")
        work = pattern if self.discount is None else apply_discount(pattern, self.discount)
        env = None
        if not work.zero_resilience:
            env = compute_envelope(work, m)
        sched = optimal_schedule(work, x, eta0, resolution=m, report_threshold=threshold, envelope=env)
        self.pattern_ = pattern
        self.envelope_ = env
        self.multiplier_ = sched.multiplier
        self.schedule_ = sched
        if self.discount is None:
            self.cost_ = execution_cost(pattern, sched, eta0).total_cost
        else:
            self.cost_ = discounted_cost(pattern, sched, eta0, self.discount)
        return self

    def _check_fitted(self):
        if not hasattr(self, "schedule_"):
            raise NotFittedError("call fit before using this OptimalScheduler")

    def predict(self, t):
        """Cumulative purchases ``X_t``."""
        self._check_fitted()
        return self.schedule_.cumulative(t)

    def transform(self, t):
        """Optimal frontier (``rho``-adjusted mark-up level) at ``t``."""
        self._check_fitted()
        return self.schedule_.frontier_curve()(np.asarray(t, dtype=float))

    def score(self, pattern=None, y=None):
        """Negative execution cost of the fitted schedule (on ``pattern`` if given)."""
        self._check_fitted()
        if pattern is None:
            return -self.cost_
        p = check_pattern(pattern)
        eta0 = p.eta0 if self.eta0 is None else float(self.eta0)
        return -execution_cost(p, self.schedule_, eta0).total_cost
