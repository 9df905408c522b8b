import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from odds.errors import DimensionError, EvaluationError
from odds.numerics import (
    DensityGrid,
    DiscreteDistribution,
    fourier_coefficient,
    ks_statistic,
    quadrature,
    tv_distance,
)
from odds.rng import RngStream


# -- quadrature ---------------------------------------------------------------

def test_quadrature_square():
    assert abs(quadrature(lambda x: x**2, 0.0, 1.0, 64) - 1 / 3) <= 1e-12


def test_quadrature_constant():
    assert quadrature(lambda x: 1.0, 0.0, 2.0, 2) == pytest.approx(2.0, abs=1e-15)


def test_quadrature_exp():
    assert abs(quadrature(np.exp, 0.0, 1.0, 128) - (math.e - 1)) <= 1e-10


def test_quadrature_rejects_odd_n():
    with pytest.raises(ValueError):
        quadrature(np.sin, 0, 1, 3)


def test_quadrature_names_bad_node():
    with pytest.raises(EvaluationError, match="node 2"):
        quadrature(lambda x: 1.0 / (x - 0.5), 0.0, 1.0, 4)


@given(
    c=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    a=st.floats(-3, 3),
    w=st.floats(0.1, 4),
    half=st.integers(1, 40),
)
def test_quadrature_exact_on_cubics(c, a, w, half):
    b = a + w
    f = lambda x: c[0] + c[1] * x + c[2] * x**2 + c[3] * x**3
    F = lambda x: c[0] * x + c[1] * x**2 / 2 + c[2] * x**3 / 3 + c[3] * x**4 / 4
    scale = 1 + sum(abs(ci) for ci in c) * (1 + abs(a) + w) ** 4
    assert abs(quadrature(f, a, b, 2 * half) - (F(b) - F(a))) <= 1e-12 * scale


# -- total variation ----------------------------------------------------------

def test_tv_examples():
    p = DiscreteDistribution([0.75, 0.25])
    assert tv_distance(p, p) == 0.0
    assert tv_distance(DiscreteDistribution([1.0, 0.0]), DiscreteDistribution([0.0, 1.0])) == 1.0
    assert tv_distance(p, DiscreteDistribution([0.5, 0.5])) == pytest.approx(0.25, abs=1e-15)


def test_tv_length_mismatch():
    with pytest.raises(DimensionError):
        tv_distance(DiscreteDistribution.uniform(2), DiscreteDistribution.uniform(3))


@st.composite
def triples(draw):
    k = draw(st.integers(1, 8))
    vecs = [draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k)) for _ in range(3)]
    out = []
    for v in vecs:
        v = np.asarray(v) + 1e-3
        out.append(DiscreteDistribution.normalized(v))
    return out


@given(triples())
def test_tv_is_a_metric(t):
    p, q, r = t
    assert tv_distance(p, q) == pytest.approx(tv_distance(q, p), abs=1e-15)
    assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12
    assert tv_distance(p, p) == 0.0
    if tv_distance(p, q) == 0.0:
        assert np.array_equal(p.weights, q.weights)


def test_discrete_distribution_validates_sum():
    with pytest.raises(ValueError):
        DiscreteDistribution([0.5, 0.4])


# -- Kolmogorov-Smirnov -------------------------------------------------------

def test_ks_quantile_construction():
    n = 200
    x = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert ks_statistic(x, stats.norm.cdf) <= 1 / (2 * n) + 1e-12


def test_ks_single_sample_at_median():
    assert ks_statistic([0.0], stats.norm.cdf) == pytest.approx(0.5)


def test_ks_empty():
    with pytest.raises(ValueError):
        ks_statistic([], stats.norm.cdf)


def test_ks_normal_variates():
    # P(sqrt(n) D > 3.16) ~ 2 exp(-2 * 10) from the Kolmogorov tail
    x = RngStream(11, 0).normal(10**5)
    assert ks_statistic(x, stats.norm.cdf) < 0.01


def test_ks_matches_scipy():
    x = RngStream(5, 2).random(500)
    ours = ks_statistic(x, stats.uniform.cdf)
    assert ours == pytest.approx(stats.kstest(x, "uniform").statistic, abs=1e-14)


# -- Fourier coefficients -----------------------------------------------------

def _circle(f, n=4096):
    return DensityGrid.from_function(f, 0.0, 2 * np.pi, n, periodic=True)


def test_fourier_uniform():
    c, s = fourier_coefficient(DensityGrid.uniform(0, 2 * np.pi, 512, periodic=True), 1)
    assert abs(c) < 1e-12 and abs(s) < 1e-12


def test_fourier_cosine_bump():
    psi = _circle(lambda u: (1 + np.cos(u)) / (2 * np.pi))
    c1, s1 = fourier_coefficient(psi, 1)
    assert c1 == pytest.approx(0.5, abs=1e-12)
    assert abs(s1) < 1e-12
    c2, s2 = fourier_coefficient(psi, 2)
    assert abs(c2) < 1e-12 and abs(s2) < 1e-12


def test_fourier_rejects_zero_harmonic():
    with pytest.raises(ValueError):
        fourier_coefficient(DensityGrid.uniform(0, 2 * np.pi, 16, periodic=True), 0)


@given(n=st.integers(1, 50), nodes=st.sampled_from([64, 256, 1000]))
def test_fourier_uniform_all_harmonics(n, nodes):
    psi = DensityGrid.uniform(0, 2 * np.pi, nodes, periodic=True)
    c, s = fourier_coefficient(psi, n)
    if n % nodes:
        assert abs(c) <= 1e-10 and abs(s) <= 1e-10


# -- DensityGrid --------------------------------------------------------------

def test_density_normalized():
    d = DensityGrid.from_function(lambda x: np.exp(-x), 0.0, 3.0, 1001)
    assert abs(d.integral() - 1.0) <= 1e-9
    assert np.all(d.values >= 0)


def test_density_rejects_negative():
    with pytest.raises(ValueError):
        DensityGrid((0, 1), [1.0, -1.0])


def test_interval_integral_exact_for_linear_density():
    d = DensityGrid.from_function(lambda x: 2 * x, 0.0, 1.0, 7)
    assert d.integrate_interval(0.0, 0.5) == pytest.approx(0.25, abs=1e-14)
    assert d.integrate_interval(0.13, 0.71) == pytest.approx(0.71**2 - 0.13**2, abs=1e-14)


def test_periodic_interval_wraps():
    d = DensityGrid.from_function(lambda u: 1 + np.cos(u), 0, 2 * np.pi, 64, periodic=True)
    whole = d.integrate_interval(1.0, 1.0 + 2 * np.pi)
    assert whole == pytest.approx(1.0, abs=1e-13)
    a = d.integrate_interval(5.0, 7.0)
    b = d.integrate_interval(5.0, 2 * np.pi) + d.integrate_interval(0.0, 7.0 - 2 * np.pi)
    assert a == pytest.approx(b, abs=1e-13)


def test_moments_of_uniform():
    d = DensityGrid.uniform(-1.0, 1.0, 33)
    assert abs(d.mean()) < 1e-15
    assert d.moment(2) == pytest.approx(1 / 3, abs=1e-14)


def test_sampling_matches_cdf():
    d = DensityGrid.from_function(lambda x: 1 + np.sin(3 * x) ** 2, 0.0, 2.0, 257)
    x = d.sample(RngStream(3, 0), 200_000)
    assert ks_statistic(x, d.cdf) < 0.005


def test_periodic_sampling_stays_in_range():
    d = DensityGrid.from_function(lambda u: 2 + np.cos(u), 0, 2 * np.pi, 32, periodic=True)
    x = d.sample(RngStream(3, 1), 50_000)
    assert x.min() >= 0 and x.max() < 2 * np.pi
    assert ks_statistic(x, d.cdf) < 0.01


def test_point_mass():
    d = DensityGrid.point_mass(0.0)
    assert d.moment(2) == 0.0
    assert np.all(d.sample(RngStream(), 10) == 0.0)


def test_2d_sampling_marginals():
    f = lambda x, y: (1 + x) * (2 - y) + 0.5 * np.cos(3 * x * y)
    d = DensityGrid.from_function_2d(f, (0, 1), (0, 1), shape=(33, 41))
    pts = d.sample(RngStream(9, 0), 200_000)
    mx = d.marginal(0)
    my = d.marginal(1)
    assert ks_statistic(pts[:, 0], mx.cdf) < 0.005
    assert ks_statistic(pts[:, 1], my.cdf) < 0.005
    # a box probability checks the joint law, not just the marginals
    inside = np.mean((pts[:, 0] < 0.3) & (pts[:, 1] > 0.6))
    assert inside == pytest.approx(d.integrate_box(0, 0.3, 0.6, 1.0), abs=0.004)


def test_box_integral_of_bilinear_is_exact():
    d = DensityGrid.from_function_2d(lambda x, y: x + y, (0, 1), (0, 1), shape=(5, 9))
    # exact integral of x + y over [0, 0.25) x [0, 1)
    assert d.integrate_box(0, 0.25, 0, 1) == pytest.approx(0.25**2 / 2 + 0.25 / 2, abs=1e-15)
