import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_atomic
from liqsched import LiquidityPattern, compute_envelope, concave_envelope, decreasing_envelope, signal
from liqsched.envelope import density, l2_norm_sq, verify_signal_identity


def brute_decreasing_envelope(lam):
    return np.array([max(lam[i:]) for i in range(len(lam))])


def brute_hull_at(k, v, q):
    """Upper concave envelope at ``q`` as the best chord value over all point pairs (O(n^3) overall)."""
    best = -np.inf
    for a in range(len(k)):
        for b in range(len(k)):
            if k[a] <= q <= k[b]:
                if k[b] == k[a]:
                    val = max(v[a], v[b])
                else:
                    w = (q - k[a]) / (k[b] - k[a])
                    val = (1 - w) * v[a] + w * v[b]
                best = max(best, val)
    return best


def brute_signal(lt, kt, rho):
    n = len(lt)
    out = np.zeros(n)
    for i in range(n):
        cands = [rho[i]] if lt[i] > 0 else [0.0]
        for j in range(i + 1, n):
            num, den = lt[j] - lt[i], kt[j] - kt[i]
            cands.append(0.0 if num == 0 else num / den)
        out[i] = min(cands)
    return out


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30))
def test_decreasing_envelope_matches_brute_force(lam):
    out = decreasing_envelope(lam)
    np.testing.assert_array_equal(out, brute_decreasing_envelope(lam))
    assert np.all(np.diff(out) <= 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 10.0), st.floats(0.01, 10.0)), min_size=1, max_size=12, unique_by=lambda p: p[0]))
def test_concave_envelope_matches_chord_oracle(pts):
    pts = sorted(pts)
    k = np.array([0.0] + [p[0] for p in pts])
    v = np.array([0.0] + [p[1] for p in pts])
    hull = concave_envelope(k, v)
    hk, hv = k[hull], v[hull]
    assert hull[0] == 0 and hull[-1] == len(k) - 1
    slopes = np.diff(hv) / np.diff(hk)
    assert np.all(np.diff(slopes) < 0)
    for q in k:
        assert np.interp(q, hk, hv) == pytest.approx(brute_hull_at(k, v, q), rel=1e-9, abs=1e-12)


def test_two_atom_envelope(two_atom):
    env = compute_envelope(two_atom)
    np.testing.assert_allclose(env.curve_k, [0.0, 0.25, 1.0])
    np.testing.assert_allclose(env.curve_value, [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(env.hull, [0, 1, 2])
    np.testing.assert_allclose(env.density.values, [2.0, 2.0 / 3.0])
    assert env.l2_sq == pytest.approx(4.0 / 3.0, abs=1e-15)
    np.testing.assert_allclose(signal(two_atom), [2.0 / 3.0, 2.0], rtol=1e-15)


def test_density_is_left_continuous():
    dens = density([0.0, 1.0, 3.0], [0.0, 2.0, 3.0])
    np.testing.assert_allclose(dens([0.0, 0.5, 1.0, 1.0 + 1e-12, 3.0]), [2.0, 2.0, 2.0, 0.5, 0.5])
    assert l2_norm_sq(dens) == pytest.approx(4.0 + 0.25 * 2)


def test_ow_l2_norm_converges():
    # discrete constant-rate cell: l2 = 1 + m tanh(h/2) with h = r T / m
    p = LiquidityPattern("pwc", [0], [1], [1], horizon=2)
    for m in (10, 100, 1000):
        env = compute_envelope(p, m)
        assert env.l2_sq == pytest.approx(1 + m * np.tanh(1.0 / m), rel=1e-10)
    assert compute_envelope(p, 1000).l2_sq == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(25))
def test_signal_matches_pairwise_oracle_and_identity(seed):
    rng = np.random.default_rng(seed)
    p = random_atomic(rng, max_n=12)
    env = compute_envelope(p)
    g = env.grid
    L = signal(p)
    np.testing.assert_allclose(L, brute_signal(env.lambda_tilde, env.kappa_tilde, g.rho), rtol=1e-13)
    assert verify_signal_identity(L, env.density, env.kappa_tilde) <= 1e-9


def test_signal_block_size_does_not_matter():
    p = LiquidityPattern("pwc", [0, 1], [1, 2], [1, 0.5], horizon=3)
    np.testing.assert_array_equal(signal(p, 50, block=7), signal(p, 50, block=512))


def test_hull_dominates_curve_on_sampled_patterns():
    p = LiquidityPattern("pwc", [0, 0.5, 1.0, 2.0], [1, 3, 0.5, 2], [2, 0.5, 1, 1], horizon=3)
    env = compute_envelope(p, 200)
    assert np.all(env.concave_hull_at(env.curve_k) >= env.curve_value - 1e-12)
    assert np.all(np.diff(env.kappa_tilde) <= 0)
    assert np.all(np.diff(env.lambda_tilde) <= 0)
