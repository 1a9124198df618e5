"""Acceptance criteria 1-10; each test prints and records one PASS/FAIL line."""
import math
import time

import numpy as np

from conftest import ACCEPTANCE_RESULTS, decreasing_kappa_atomic, kappa_nodes, random_atomic
from liqsched import (
    LiquidityPattern,
    apply_discount,
    brute_force,
    compute_envelope,
    convexity_check,
    cost_matrix,
    discounted_cost,
    execution_cost,
    k_functional,
    optimal_schedule,
    projected_gradient,
    signal,
    x_to_y,
)
from liqsched.envelope import verify_signal_identity

LN2 = math.log(2.0)


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title} | {detail}"
    print(line)
    ACCEPTANCE_RESULTS.append(line)
    assert ok, line


def random_instances(seed, count):
    """Atomic instances with n <= 6, depth in [0.1, 10], resilience in [0.01, 3], eta0 in {0, 0.5}."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 7))
        times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.1, 1.0, n - 1))])
        p = LiquidityPattern(
            "atomic", times, rng.uniform(0.1, 10.0, n), rng.uniform(0.01, 3.0, n), eta0=float(rng.choice([0.0, 0.5]))
        )
        out.append((p, float(rng.uniform(0.5, 2.0))))
    return out


def ow_desk():
    return LiquidityPattern("pwc", [0.0], [1.0], [1.0], horizon=2.0)


def test_criterion_01_ow_reproduction():
    p = ow_desk()
    start = time.perf_counter()
    s = optimal_schedule(p, 1.0, 0.0, resolution=1000)
    cost = execution_cost(p, s).total_cost
    elapsed = time.perf_counter() - start
    (t0, a0), (t1, a1) = s.atoms
    rates = np.array([r for _, _, r in s.rates])
    ok = (
        len(s.atoms) == 2
        and (t0, t1) == (0.0, 2.0)
        and abs(a0 - 0.25) <= 0.01
        and abs(a1 - 0.25) <= 0.01
        and np.all(np.abs(rates - 0.25) <= 0.01)
        and abs(s.multiplier - 0.5) <= 1e-3
        and abs(cost - 0.25) <= 1e-3
        and elapsed < 1.0
    )
    report(
        1,
        "OW reproduction",
        ok,
        f"blocks=({a0:.5f}, {a1:.5f}) rate in [{rates.min():.6f}, {rates.max():.6f}] "
        f"y*={s.multiplier:.7f} cost={cost:.7f} time={elapsed * 1e3:.1f}ms",
    )


def test_criterion_02_two_atom_exact():
    p = LiquidityPattern("atomic", [0.0, 1.0], [1.0, 1.0], [LN2, 0.0])
    optimal_schedule(p)  # warm-up
    start = time.perf_counter()
    s = optimal_schedule(p, 1.0, 0.0)
    cost = execution_cost(p, s).total_cost
    elapsed = time.perf_counter() - start
    err = max(np.max(np.abs(s.trades - 0.5)), abs(s.multiplier - 0.75), abs(cost - 0.375))
    report(2, "two-atom exact instance", err <= 1e-10 and elapsed < 0.01, f"max error={err:.2e} time={elapsed * 1e3:.2f}ms")


def test_criterion_03_oracle_equivalence():
    start = time.perf_counter()
    worst_lattice, worst_pg, strict, failures = -np.inf, 0.0, 0, []
    for i, (p, x) in enumerate(random_instances(2024, 50)):
        c = execution_cost(p, optimal_schedule(p, x)).total_cost
        form = cost_matrix(p)
        bf = brute_force(form, x)
        # scheduler can only beat the lattice by the certified bound, and never lose to it
        if not (bf.cost - bf.bound <= c <= bf.cost + 1e-9):
            failures.append(i)
        worst_lattice = max(worst_lattice, c - bf.cost)
        if np.all(np.diff(kappa_nodes(p)) < 0):
            strict += 1
            pg = projected_gradient(form, x)
            worst_pg = max(worst_pg, abs(pg.cost - c))
    elapsed = time.perf_counter() - start
    ok = not failures and worst_pg <= 1e-6 and elapsed < 60
    report(
        3,
        "oracle equivalence",
        ok,
        f"50 instances, max(sched - lattice)={worst_lattice:.2e}, {strict} strict-kappa PG max gap={worst_pg:.2e}, "
        f"failures={failures} time={elapsed:.1f}s",
    )


def test_criterion_04_foc_certificate():
    worst_atomic = 0.0
    for p, x in random_instances(4, 50) + [(LiquidityPattern("atomic", [0, 1], [1, 1], [LN2, 0]), 1.0)]:
        foc = execution_cost(p, optimal_schedule(p, x), check_foc=True).foc
        worst_atomic = max(worst_atomic, -foc.min_residual, foc.max_abs_at_increase)
    sampled = [
        (ow_desk(), 1.0, 0.0),
        (ow_desk(), 0.2, 1.0),
        (LiquidityPattern("pwc", [0, 0.5, 1.0, 2.0], [1, 3, 0.5, 2], [2, 0.5, 1, 1], horizon=3), 1.0, 0.3),
        (LiquidityPattern("pwc", [0, 1, 2], [1, 0.5, 2], [1, 0, 1], horizon=3), 1.0, 0.0),
    ]
    worst_sampled = 0.0
    for p, x, eta0 in sampled:
        foc = execution_cost(p, optimal_schedule(p, x, eta0, resolution=1000), eta0, check_foc=True).foc
        worst_sampled = max(worst_sampled, -foc.min_residual, foc.max_abs_at_increase)
    ok = worst_atomic <= 1e-9 and worst_sampled <= 1e-5
    report(4, "FOC certificate", ok, f"atomic worst={worst_atomic:.2e} (tol 1e-9), sampled worst={worst_sampled:.2e} (tol 1e-5)")


def test_criterion_05_signal_identity():
    worst_atomic = 0.0
    for p, _ in random_instances(5, 50):
        env = compute_envelope(p)
        worst_atomic = max(worst_atomic, verify_signal_identity(signal(p), env.density, env.kappa_tilde))
    env = compute_envelope(ow_desk(), 1000)
    ow_gap = verify_signal_identity(signal(env.grid), env.density, env.kappa_tilde)
    ok = worst_atomic <= 1e-9 and ow_gap <= 1e-5
    report(5, "running-max signal equals envelope density", ok, f"atomic worst={worst_atomic:.2e}, OW m=1000 gap={ow_gap:.2e}")


def test_criterion_06_zero_resilience():
    cases = [
        (LiquidityPattern("atomic", [0, 1, 2, 3], [1, 2, 0.5, 2], [0, 0, 0, 0]), 1.5, 0.3, 1.0),
        (LiquidityPattern("pwc", [0, 1, 2, 3], [1, 2, 1, 2], [0, 0, 0, 0], horizon=4), 1.0, 0.0, 1.0),
        (LiquidityPattern("pwc", [0, 0.5, 2], [2, 1, 2], [0, 0, 0], horizon=3), 2.0, 1.0, 0.0),
    ]
    details, ok = [], True
    for p, x, eta0, t_star in cases:
        s = optimal_schedule(p, x, eta0)
        cost = execution_cost(p, s, eta0).total_cost
        exact = eta0 * x + x * x / 4
        good = s.nonzero() == [(t_star, x)] and abs(cost - exact) <= 1e-14
        ok &= good
        details.append(f"t={s.nonzero()[0][0]:g} |cost-exact|={abs(cost - exact):.1e}")
    report(6, "zero resilience: single trade at earliest max", ok, "; ".join(details))


def test_criterion_07_cost_equals_k():
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(100):
        if i % 2:
            p = random_atomic(rng, max_n=8)
            times = p.times
        else:
            n = int(rng.integers(1, 5))
            cells = np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 1.0, n - 1))])
            p = LiquidityPattern("pwc", cells, rng.uniform(0.2, 2, n), rng.uniform(0, 2, n), horizon=cells[-1] + 1, eta0=rng.uniform(0, 1))
            times = np.sort(rng.uniform(0, p.horizon, 12))
        sizes = rng.exponential(size=times.size)
        trades = np.column_stack([times, sizes])
        c = execution_cost(p, trades).total_cost
        k = k_functional(x_to_y(p, trades), p)
        worst = max(worst, abs(c - k) / (1 + c))
    report(7, "C(X) = K(Y) round trips", worst <= 1e-10, f"100 schedules, max |C-K|/(1+C)={worst:.2e}")


def test_criterion_08_psd_iff_decreasing():
    rng = np.random.default_rng(8)
    agree, decreasing = 0, 0
    for i in range(200):
        n = int(rng.integers(2, 9))
        p = decreasing_kappa_atomic(rng, n) if i % 2 else random_atomic(rng, n, max_n=8)
        kappa = kappa_nodes(p)
        assert np.min(np.abs(np.diff(kappa))) > 1e-9  # no ties
        rep = convexity_check(cost_matrix(p), kappa)
        decreasing += rep.kappa_decreasing
        agree += rep.is_psd == rep.kappa_decreasing
    report(8, "PSD iff kappa decreasing", agree == 200, f"{agree}/200 agree ({decreasing} decreasing, {200 - decreasing} not)")


def test_criterion_09_discount_equivalence():
    rng = np.random.default_rng(9)
    failures, worst = [], -np.inf
    for i in range(20):
        p = random_atomic(rng, 3)
        rbar = rng.uniform(0.0, 1.0, 3)
        s = optimal_schedule(apply_discount(p, rbar), 1.0)
        c = discounted_cost(p, s, discount=rbar)
        bf = brute_force(cost_matrix(p, discount=rbar), 1.0)
        if not (bf.cost - bf.bound <= c <= bf.cost + 1e-9):
            failures.append(i)
        worst = max(worst, c - bf.cost)
    report(9, "discount equivalence", not failures, f"20 instances, max(sched - lattice)={worst:.2e}, failures={failures}")


def test_criterion_10_convergence():
    p = ow_desk()
    ms = (250, 500, 1000, 2000)
    costs = [execution_cost(p, optimal_schedule(p, resolution=m)).total_cost for m in ms]
    pairs_ok = all(abs(costs[i] - costs[i + 1]) <= 2 * (costs[i] - 0.25) for i in range(3))
    monotone = all(costs[i + 1] <= costs[i] + 1e-6 for i in range(3))
    report(
        10,
        "grid convergence",
        pairs_ok and monotone,
        "cost-0.25 at m=250..2000: " + ", ".join(f"{c - 0.25:.2e}" for c in costs),
    )
