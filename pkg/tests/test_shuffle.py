import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odds.errors import ConvergenceError, DimensionError, RegularityError
from odds.numerics import DiscreteDistribution, tv_distance
from odds.rng import RngStream
from odds.shuffle import (
    TransitionKernel,
    borel_contraction_certificate,
    iterate_distribution,
    mixing_time,
    random_kernel,
    shuffle_kernel,
    simulate_paths,
    transposition_law,
    two_card_expectation,
    two_card_mc,
)

K7 = TransitionKernel([[0.7, 0.3], [0.3, 0.7]])
K6 = TransitionKernel([[0.6, 0.4], [0.4, 0.6]])


def test_two_card_expectation_values():
    assert two_card_expectation(1.0, 7) == 1.0
    assert two_card_expectation(0.5, 1) == 0.0
    assert two_card_expectation(0.9, 3) == pytest.approx(0.512, abs=1e-15)


def test_two_card_mc_deterministic_when_p_is_one():
    assert two_card_mc(1.0, 9, 100, RngStream(1, 0)) == 1.0


def test_two_card_mc_values():
    assert abs(two_card_mc(0.9, 3, 10**6, RngStream(1, 0)) - 0.512) <= 0.004
    assert abs(two_card_mc(0.5, 10, 10**6, RngStream(1, 1))) <= 0.004


def test_kernel_rejects_row_stochastic_only():
    with pytest.raises(ValueError, match="doubly stochastic"):
        TransitionKernel([[0.5, 0.5], [0.2, 0.8]])


def test_two_state_shuffle_kernel():
    p = 0.8
    K = shuffle_kernel(2, [p, 1 - p])
    assert np.allclose(K.alpha, [[p, 1 - p], [1 - p, p]], atol=1e-15)


def test_uniform_shuffle_is_flat():
    K = shuffle_kernel(3, DiscreteDistribution.uniform(6))
    assert np.allclose(K.alpha, 1 / 6, atol=1e-15)


def test_single_transposition_kernel_has_zeros():
    w = np.zeros(6)
    w[0] = 0.5
    w[1] = 0.5  # (0, 2, 1): swap the last two cards
    K = shuffle_kernel(3, w)
    assert K.eps == 0.0
    assert np.allclose(K.alpha.sum(0), 1) and np.allclose(K.alpha.sum(1), 1)
    # group-table oracle: every column has exactly two nonzero entries
    assert np.all((K.alpha > 0).sum(axis=0) == 2)


def test_shuffle_kernel_size_cap():
    with pytest.raises(ValueError):
        shuffle_kernel(6, np.full(720, 1 / 720))


def test_iterate_two_state():
    p1, trace = iterate_distribution([K7], DiscreteDistribution([1.0, 0.0]))
    assert np.allclose(p1.weights, [0.7, 0.3], atol=1e-15)
    assert trace.spread[-1] == pytest.approx(0.4, abs=1e-15)
    _, trace = iterate_distribution([K7] * 5, DiscreteDistribution([1.0, 0.0]))
    assert trace.spread[-1] == pytest.approx(0.4**5, abs=1e-15)


def test_iterate_dimension_mismatch():
    with pytest.raises(DimensionError):
        iterate_distribution([K7], DiscreteDistribution.uniform(3))


@settings(max_examples=30, deadline=None)
@given(k=st.integers(2, 24), seed=st.integers(0, 2**32), n=st.integers(1, 20))
def test_uniform_is_stationary(k, seed, n):
    K = random_kernel(k, RngStream(seed, 0))
    pn, _ = iterate_distribution([K] * n, DiscreteDistribution.uniform(k))
    assert tv_distance(pn, DiscreteDistribution.uniform(k)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(k=st.integers(2, 24), seed=st.integers(0, 2**32), n=st.integers(1, 30))
def test_envelope_and_doeblin_contraction(k, seed, n):
    rng = RngStream(seed, 0)
    kernels = [random_kernel(k, rng.child(i)) for i in range(n)]
    p0 = DiscreteDistribution.normalized(rng.random(k) ** 4 + 1e-9)
    cert = borel_contraction_certificate(kernels, p0)
    assert cert.holds
    P, p = np.asarray(cert.trace.P), np.asarray(cert.trace.p)
    assert np.all(np.diff(P) <= 1e-12) and np.all(np.diff(p) >= -1e-12)
    s = cert.trace.spread
    for i, K in enumerate(kernels):
        assert s[i + 1] <= (1 - k * K.eps) * s[i] + 1e-12


@pytest.mark.parametrize("p", [0.05, 0.3, 0.9, 0.99])
def test_two_card_consistency(p):
    K = shuffle_kernel(2, [p, 1 - p])
    _, trace = iterate_distribution([K] * 50, DiscreteDistribution([1.0, 0.0]))
    for n in range(51):
        assert trace.spread[n] == pytest.approx(abs(two_card_expectation(p, n)), abs=1e-12)


def test_certificate_saturated_by_symmetric_chain():
    cert = borel_contraction_certificate([K7] * 20, DiscreteDistribution([1.0, 0.0]))
    for r in cert.rows:
        assert r.spread == pytest.approx(r.bound, abs=1e-12)


def test_certificate_uniform_start():
    cert = borel_contraction_certificate([K7] * 5, DiscreteDistribution.uniform(2))
    assert all(r.spread == 0.0 for r in cert.rows)


def test_certificate_inhomogeneous():
    cert = borel_contraction_certificate([K7, K6] * 5, DiscreteDistribution([1.0, 0.0]))
    assert cert.eps == pytest.approx(0.3)
    assert cert.rows[10].spread <= 0.4**10
    assert cert.rows[10].spread == pytest.approx((0.4 * 0.2) ** 5, abs=1e-15)


def test_certificate_refuses_zero_eps():
    with pytest.raises(RegularityError):
        borel_contraction_certificate([TransitionKernel(np.eye(2))], DiscreteDistribution([1.0, 0.0]))


def test_mixing_time_flat_kernel():
    K = TransitionKernel(np.full((4, 4), 0.25))
    assert mixing_time(K, 0.1) == 1


def test_mixing_time_two_state():
    # TV to uniform after n steps is 0.4**n / 2
    assert mixing_time(K7, 1e-3) == 7
    assert 0.5 * 0.4**7 <= 1e-3 < 0.5 * 0.4**6
    assert mixing_time(K7, 1e-3, metric="spread") == 8


def test_mixing_time_lazy_transpositions_matches_matrix_power():
    K = shuffle_kernel(3, transposition_law(3))
    n = mixing_time(K, 1e-3)
    def worst(n):
        M = np.linalg.matrix_power(K.alpha, n)
        return 0.5 * np.abs(M - 1 / 6).sum(axis=0).max()
    assert worst(n) <= 1e-3 < worst(n - 1)


def test_mixing_time_periodic_kernel_diverges():
    swap = TransitionKernel([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ConvergenceError):
        mixing_time(swap, 1e-3)
    with pytest.raises(ConvergenceError):
        mixing_time(TransitionKernel(np.eye(3)), 1e-3)


def test_monte_carlo_paths_match_exact_iteration():
    K = shuffle_kernel(3, transposition_law(3))
    p0 = DiscreteDistribution.point_mass(6, 0)
    N = 10**6
    emp = simulate_paths(K, p0, 4, N, RngStream(6, 0))
    exact, _ = iterate_distribution([K] * 4, p0)
    assert np.max(np.abs(emp.weights - exact.weights)) <= 4 / math.sqrt(N)
