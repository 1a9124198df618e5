import math

import numpy as np
import pytest

from liqsched import LiquidityPattern, rho

LN2 = math.log(2.0)


@pytest.fixture
def two_atom():
    return LiquidityPattern("atomic", [0.0, 1.0], [1.0, 1.0], [LN2, 0.0])


@pytest.fixture
def ow_pattern():
    return LiquidityPattern("piecewise_constant", [0.0], [1.0], [1.0], horizon=2.0)


def random_atomic(rng, n=None, *, eta0=None, max_n=6):
    """Atomic pattern with random spacing, depth in [0.2, 2] and resilience in [0, 2]."""
    n = int(rng.integers(2, max_n + 1)) if n is None else n
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.1, 1.0, n - 1))])
    eta0 = float(rng.choice([0.0, rng.uniform(0.0, 1.0)])) if eta0 is None else eta0
    return LiquidityPattern("atomic", times, rng.uniform(0.2, 2.0, n), rng.uniform(0.0, 2.0, n), eta0=eta0)


def decreasing_kappa_atomic(rng, n, *, strict=True):
    """Atomic pattern whose kappa = delta / rho**2 is (strictly) decreasing."""
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.1, 1.0, n - 1))])
    res = rng.uniform(0.1, 2.0, n)
    p = LiquidityPattern("atomic", times, np.ones(n), res)
    kappa = np.sort(rng.uniform(0.2, 2.0, n))[::-1]
    if not strict and n > 2:
        kappa[1] = kappa[2]
    return p.replace(depth=kappa * rho(p, times) ** 2)


def kappa_nodes(pattern):
    return pattern.depth / rho(pattern, pattern.times) ** 2


ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
