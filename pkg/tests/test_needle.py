import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odds.needle import (
    NeedleConfig,
    Segmentation,
    crossing_probability_exact,
    crossing_probability_mc,
    darboux_bound,
    hostinsky_segmentation_error,
    nonincreasing_with_slack,
    segmentation_convergence_check,
)
from odds.numerics import DensityGrid, quadrature
from odds.rng import RngStream

UNIT = ((0.0, 1.0), (0.0, 1.0))


def gaussian_bump(u, v, sd=0.15):
    return np.exp(-((u - 0.5) ** 2 + (v - 0.5) ** 2) / (2 * sd**2))


def random_lipschitz(rng: RngStream):
    c = rng.random(6)
    return lambda u, v: (1 + 0.5 * c[0] * (u - 0.5) + 0.5 * c[1] * (v - 0.5)
                         + 0.3 * c[2] * np.cos(3 * u + 6 * c[3]) + 0.3 * c[4] * np.sin(2 * u * v + c[5]))


def test_config_validation():
    with pytest.raises(ValueError):
        NeedleConfig.on_table(1.0, 1.0, 1)
    with pytest.raises(ValueError):
        NeedleConfig.on_table(1.0, 0.5, 0)


def test_vanishing_needle():
    cfg = NeedleConfig.on_table(1.0, 1e-9, 2)
    assert crossing_probability_mc(cfg, 10**5, RngStream(0, 0)) <= 1e-6
    assert crossing_probability_exact(cfg) <= 1e-6


@pytest.mark.parametrize("n", [1, 3])
def test_uniform_exact_is_buffon(n):
    cfg = NeedleConfig.on_table(1.0, 0.5, n)
    assert crossing_probability_exact(cfg) == pytest.approx(1 / math.pi, abs=1e-12)


def test_uniform_mc_within_three_sigma():
    cfg = NeedleConfig.on_table(1.0, 0.5, 1)
    assert abs(crossing_probability_mc(cfg, 10**6, RngStream(1, 0)) - 1 / math.pi) <= 0.0014


def test_exact_matches_fine_quadrature():
    cfg = NeedleConfig.on_table(1.0, 0.7, 2, gaussian_bump, shape=(65, 65))
    mx = cfg.phi.marginal(0)
    def q(x):
        d = np.abs(x - 2 * np.round(x / 2))
        return np.where(d < 0.7, (2 / math.pi) * np.arccos(np.minimum(d / 0.7, 1.0)), 0.0)
    # piecewise oracle: Simpson on each quarter-unit piece (kinks only at piece ends)
    edges = np.linspace(0, 4, 17)
    cuts = np.unique(np.concatenate([edges, [0.7, 1.3, 2.7, 3.3], mx.nodes]))
    oracle = sum(quadrature(lambda x: mx(x) * q(x), a, b, 64) for a, b in zip(cuts[:-1], cuts[1:]))
    assert crossing_probability_exact(cfg) == pytest.approx(oracle, abs=1e-6)


def test_mid_gap_density_never_crosses():
    # centre confined to x in [0.8, 1.2]: distance to the lines x = 0, 2 is >= 0.8 > b
    f = lambda u, v: ((u >= 0.2) & (u <= 0.3)).astype(float)
    side = 4.0
    phi = DensityGrid.from_function_2d(lambda x, y: f(x / side, y / side), (0, side), (0, side), (401, 3))
    cfg = NeedleConfig(1.0, 0.5, 2, phi)
    assert crossing_probability_exact(cfg) == pytest.approx(0.0, abs=1e-15)
    assert crossing_probability_mc(cfg, 10**5, RngStream(2, 0)) == 0.0


def test_gaussian_table_n8_near_buffon():
    cfg = NeedleConfig.on_table(1.0, 0.5, 8, gaussian_bump)
    exact = crossing_probability_exact(cfg)
    assert abs(exact - 1 / math.pi) <= 0.01
    N = 10**6
    assert abs(crossing_probability_mc(cfg, N, RngStream(3, 0)) - 1 / math.pi) <= 0.01


def test_estimator_consistency_random_configs():
    rng = RngStream(40, 0)
    N = 20_000
    fails = 0
    for i in range(50):
        r = rng.child(i)
        a = 0.5 + 2 * r.random()
        b = a * (0.1 + 0.8 * r.random())
        n = 1 + r.integers(4)
        cfg = NeedleConfig.on_table(a, b, n, random_lipschitz(r), shape=(33, 33))
        gap = abs(crossing_probability_mc(cfg, N, r) - crossing_probability_exact(cfg))
        fails += gap > 4 / math.sqrt(N)
    assert fails == 0


def test_hostinsky_limit_random_densities():
    rng = RngStream(20, 0)
    for i in range(20):
        f = random_lipschitz(rng.child(i))
        errs = [abs(crossing_probability_exact(NeedleConfig.on_table(1.0, 0.5, n, f)) - 1 / math.pi)
                for n in (1, 2, 4, 8)]
        assert nonincreasing_with_slack(errs, 0.1)
        assert errs[-1] <= 0.01


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(0.01, 100), ratio=st.floats(0.05, 0.95), n=st.integers(1, 4))
def test_scale_invariance(scale, ratio, n):
    f = lambda u, v: 1 + u * v + np.cos(5 * u)
    base = NeedleConfig.on_table(1.0, ratio, n, f, shape=(33, 33))
    big = NeedleConfig.on_table(scale, ratio * scale, n, f, shape=(33, 33))
    assert crossing_probability_exact(big) == pytest.approx(crossing_probability_exact(base), abs=1e-9)
    mc = [crossing_probability_mc(c, 2000, RngStream(7, 0)) for c in (base, big)]
    assert mc[0] == pytest.approx(mc[1], abs=1e-9)


# -- segmentation -------------------------------------------------------------

def linear_xy():
    return DensityGrid.from_function_2d(lambda x, y: x + y, *UNIT, shape=(2, 2))


def test_segmentation_constant_density():
    phi = DensityGrid.uniform_2d(*UNIT)
    for m in (1, 4, 9, 100):
        assert hostinsky_segmentation_error(Segmentation(UNIT, m, 0.37), phi) <= 1e-12


def test_segmentation_linear_m4():
    err = hostinsky_segmentation_error(Segmentation(UNIT, 4, 0.5), linear_xy())
    assert err == pytest.approx(0.0625, abs=1e-10)


def test_segmentation_halves_per_refinement():
    rows = segmentation_convergence_check(linear_xy(), 0.5, [4**j for j in range(1, 7)])
    for j, r in enumerate(rows, start=1):
        assert r.error == pytest.approx(1 / (8 * 2**j), abs=1e-12)
        assert r.error <= r.bound


def test_segmentation_white_volume():
    seg = Segmentation(((0, 2), (1, 4)), 9, 0.25)
    _, lo, hi = seg.white_strips()
    cell_height = 3.0 / 3
    assert np.allclose((hi - lo) * cell_height, 0.25 * seg.cell_volume)


def test_segmentation_rejects_bad_m():
    with pytest.raises(ValueError):
        Segmentation(UNIT, 8, 0.5)
    with pytest.raises(ValueError):
        segmentation_convergence_check(linear_xy(), 0.5, [16, 4])


def test_lipschitz_rate():
    phi = DensityGrid.from_function_2d(lambda x, y: 1 + np.sin(3 * x) * np.cos(2 * y) + x, *UNIT, shape=(257, 257))
    rows = segmentation_convergence_check(phi, 0.4, [4**j for j in range(2, 6)])
    for r0, r1 in zip(rows, rows[1:]):
        assert r1.error <= 0.6 * r0.error


def test_step_density_converges():
    inside = lambda x, y: ((x > 0.23) & (x < 0.71) & (y > 0.3) & (y < 0.6)).astype(float)
    phi = DensityGrid.from_function_2d(inside, *UNIT, shape=(1025, 1025))
    rows = segmentation_convergence_check(phi, 0.3, [4**j for j in range(1, 7)])
    errs = [r.error for r in rows]
    bounds = [r.bound for r in rows]
    assert nonincreasing_with_slack(errs, 0.1)
    assert all(b1 <= b0 + 1e-12 for b0, b1 in zip(bounds, bounds[1:]))
    assert all(r.error <= r.bound for r in rows)
    assert errs[-1] < 0.005


def test_uniform_all_errors_tiny():
    rows = segmentation_convergence_check(DensityGrid.uniform_2d(*UNIT), 0.5, [4, 16, 64])
    assert all(r.error <= 1e-12 and r.bound <= 1e-12 for r in rows)


def test_darboux_bound_dominates_random():
    rng = RngStream(9, 0)
    for i in range(10):
        c = rng.random(3)
        phi = DensityGrid.from_function_2d(lambda x, y: 1 + c[0] * np.sin(7 * x * y + c[1]) + c[2] * y,
                                           *UNIT, shape=(65, 65))
        for m in (1, 4, 25, 36):
            seg = Segmentation(UNIT, m, 0.1 + 0.8 * c[0], "bottom" if i % 2 else "left")
            assert hostinsky_segmentation_error(seg, phi) <= darboux_bound(seg, phi) + 1e-14
