"""Batch experiments: parameter schemas and row generators for the report runner.

Each experiment maps a validated parameter dict and an ``RngStream`` to a
list of ``ReportRow`` objects.  Rows carry their own pass rule, so the runner
only aggregates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .report import ReportRow
from .rng import RngStream

TWO_PI = 2 * math.pi


# -- parameter schemas ----------------------------------------------------------

@dataclass(frozen=True)
class Param:
    """Default value plus a check returning ``None`` or the rule the value broke."""

    default: Any
    check: Callable[[Any], "str | None"]

    def validate(self, name: str, value):
        try:
            problem = self.check(value)
        except (TypeError, ValueError):
            problem = "well-formed"
        if problem:
            raise ValueError(f"{name} must be {problem}")
        return value


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) or (isinstance(v, float) and v.is_integer())


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def integer(lo: int, default: int) -> Param:
    def check(v):
        if not _is_int(v):
            return "an integer"
        return None if v >= lo else f"≥ {lo}"
    return Param(default, check)


def real(default: float, lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False) -> Param:
    def check(v):
        if not _is_real(v):
            return "a finite number"
        if (v > lo if lo_open else v >= lo) and (v < hi if hi_open else v <= hi):
            return None
        return f"in {'(' if lo_open else '['}{lo:g}, {hi:g}{')' if hi_open else ']'}"
    return Param(default, check)


def positive(default: float) -> Param:
    return Param(default, lambda v: None if _is_real(v) and v > 0 else "> 0")


def choice(default: str, *options: str) -> Param:
    return Param(default, lambda v: None if v in options else "one of " + ", ".join(options))


def int_list(default: list, lo: int) -> Param:
    ok = lambda v: isinstance(v, list) and v and all(_is_int(x) and x >= lo for x in v)
    return Param(default, lambda v: None if ok(v) else f"a nonempty list of integers ≥ {lo}")


def real_list(default: list) -> Param:
    ok = lambda v: isinstance(v, list) and v and all(_is_real(x) and x > 0 for x in v)
    return Param(default, lambda v: None if ok(v) else "a nonempty list of positive numbers")


@dataclass(frozen=True)
class Experiment:
    name: str
    params: dict
    run: Callable[[dict, RngStream], list]
    primary: str  # statistic summarised by sweeps
    summary: str = "nonincreasing"  # or "decreasing", "halving", "slack20"
    cross_checks: tuple = field(default_factory=tuple)

    def validate(self, params: dict) -> dict:
        out = {}
        for key in params:
            if key not in self.params:
                raise ValueError(f"unknown parameter {key!r} for experiment {self.name!r}")
        for key, spec in self.params.items():
            value = params.get(key, spec.default)
            spec.validate(key, value)
            if isinstance(spec.default, int) and not isinstance(spec.default, bool) and _is_int(value):
                value = int(value)
            out[key] = value
        for check in self.cross_checks:
            check(out)
        return out


def _row(exp: str, params: dict, statistic: str, value, target=None, bound=None, passed=None) -> ReportRow:
    keys = ";".join(params) if params else "-"
    values = ";".join(_fmt_param(v) for v in params.values())
    return ReportRow.make(exp, keys, values, statistic, value, target, bound, passed)


def _fmt_param(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- recurrence -----------------------------------------------------------------

def _recurrence(p: dict, rng: RngStream) -> list:
    from .recurrence import Region, VolumePreservingMap, non_return_bound, recurrence_fraction

    def make_map(kind, alpha):
        if kind == "rotation":
            return VolumePreservingMap.rotation(alpha)
        if kind == "identity":
            return VolumePreservingMap.identity(2)
        return VolumePreservingMap.cat_map() if kind == "cat" else VolumePreservingMap.baker_map()

    fmap = make_map(p["map"], p["alpha"])
    s = p["side"]
    r0 = Region.interval(0.0, s) if fmap.dimension == 1 else Region.rectangle(0.0, s, 0.0, s)
    frac = recurrence_fraction(fmap, r0, p["k"], p["T"], p["m"], rng.child(0))
    key = {"map": p["map"], "k": p["k"], "T": p["T"], "m": p["m"]}
    rows = [
        _row("recurrence", key, "fraction", frac, 1.0, 1.0 - p["min_fraction"]),
        _row("recurrence", key, "non_return", 1.0 - frac, None,
             non_return_bound(p["k"], 1.0, r0.volume, p["T"]) + 3 / math.sqrt(p["m"])),
    ]
    n = p["configs"]
    if n:
        good = 0
        kinds = ("rotation", "cat", "baker", "identity")
        for i in range(n):
            r = rng.child(1000 + i)
            u = r.random(6)
            kind = kinds[int(4 * u[0])]
            f = make_map(kind, float(u[1]))
            side = 0.05 + 0.25 * u[2]
            lo = (1 - side) * u[3]
            reg = Region.interval(lo, lo + side) if f.dimension == 1 else Region.rectangle(lo, lo + side, 0.1, 0.1 + side)
            k = 1 + int(4 * u[4])
            T = max(k, 10 + int(290 * u[5]))
            m = p["config_samples"]
            fr = recurrence_fraction(f, reg, k, T, m, r.child(0))
            good += (1 - fr) <= non_return_bound(k, 1.0, reg.volume, T) + 3 / math.sqrt(m)
        allowed = n - math.ceil(0.99 * n)
        rows.append(_row("recurrence", {"configs": n}, "bound_consistency", good, n, allowed))
    return rows


def _recurrence_checks(p):
    if p["T"] < p["k"]:
        raise ValueError("T must be ≥ k")


# -- wheel ----------------------------------------------------------------------

def _wheel_density(kind: str, theta: float, nodes: int, rng: RngStream):
    from .numerics import DensityGrid

    if kind == "uniform":
        return DensityGrid.uniform(0.0, theta, nodes)
    if kind == "ramp":
        return DensityGrid.from_function(lambda x: x, 0.0, theta, nodes)
    amp = 0.9 * rng.random(4) / 4
    freq = 0.5 + 5.5 * rng.random(4)  # non-integer, so no sector alignment
    phase = TWO_PI * rng.random(4)
    f = lambda x: 1 + sum(amp[i] * np.cos(freq[i] * TWO_PI * x / theta + phase[i]) for i in range(4))
    return DensityGrid.from_function(f, 0.0, theta, nodes)


def _wheel(p: dict, rng: RngStream) -> list:
    from .arbitrary import WheelModel, red_black_bound, red_probability

    M, theta = p["M"], p["theta"]
    dominated, bounds, factors, gaps = 0, [], [], []
    for i in range(p["densities"]):
        phi = _wheel_density(p["density"], theta, p["nodes"], rng.child(i))
        w = WheelModel.with_pairs(theta, M, phi)
        red, b = red_probability(w), red_black_bound(w)
        dominated += abs(red - 0.5) <= 0.5 * b + 1e-12
        gaps.append(abs(red - 0.5))
        bounds.append(b)
        if b > 0:
            factors.append(red_black_bound(WheelModel.with_pairs(theta, 2 * M, phi)) / b)
    key = {"M": M, "density": p["density"]}
    n = p["densities"]
    rows = [
        _row("wheel", key, "dominated", dominated, n, 0),
        _row("wheel", key, "max_red_gap", max(gaps)),
        _row("wheel", key, "bound", float(np.mean(bounds))),
    ]
    if factors:
        worst = max(factors, key=lambda f: abs(f - 0.5))
        if M >= p["halving_from"]:
            rows.append(_row("wheel", key, "halving_factor", worst, 0.5, 0.1))
        else:
            rows.append(_row("wheel", key, "halving_factor", worst))
    return rows


# -- planets --------------------------------------------------------------------

def _planets(p: dict, rng: RngStream) -> list:
    from .arbitrary import PlanetModel, longitude_law, product_c1, tv_to_uniform
    from .numerics import DensityGrid, fourier_magnitude

    phi = DensityGrid.from_function_2d(lambda a, b: 1 + np.cos(b), (0, 1), (0, TWO_PI),
                                       shape=(2, p["bins"]), periodic=(False, True))
    model = PlanetModel(phi)
    rows = []
    for t in p["times"]:
        psi = longitude_law(model.at(float(t)), p["bins"])
        key = {"t": float(t)}
        rows.append(_row("planets", key, "c1", fourier_magnitude(psi, 1), product_c1(float(t)), p["tol"]))
        tv = tv_to_uniform(psi)
        if t >= p["tv_time"]:
            rows.append(_row("planets", key, "tv_to_uniform", tv, None, p["tv_max"]))
        else:
            rows.append(_row("planets", key, "tv_to_uniform", tv))
    return rows


# -- half circle ----------------------------------------------------------------

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19)


def _halfcircle(p: dict, rng: RngStream) -> list:
    from .arbitrary import half_circle_time_average

    rows = []
    for n in p["n"]:
        a = [math.sqrt(q) for q in _PRIMES[:n]]  # rationally independent mean motions
        b = TWO_PI * rng.child(n).random(n)
        avg = half_circle_time_average(a, b, p["T"], p["steps"])
        rows.append(_row("halfcircle", {"n": n, "T": p["T"]}, "time_average", avg, 2.0**-n, p["tol"]))
    return rows


def _halfcircle_checks(p):
    if max(p["n"]) > len(_PRIMES):
        raise ValueError(f"n must be ≤ {len(_PRIMES)}")


# -- shuffle --------------------------------------------------------------------

def _shuffle(p: dict, rng: RngStream) -> list:
    from .numerics import DiscreteDistribution
    from .shuffle import (TransitionKernel, borel_contraction_certificate, iterate_distribution,
                          random_kernel, shuffle_kernel, two_card_expectation, two_card_mc)

    rows = []
    if p["part"] in ("two-card", "all"):
        pp, n = p["p"], p["n"]
        mc = two_card_mc(pp, n, p["N"], rng.child(0))
        key = {"p": pp, "n": n, "N": p["N"]}
        rows.append(_row("shuffle", key, "two_card_mean", mc, two_card_expectation(pp, n), p["tol"]))
        K = shuffle_kernel(2, [pp, 1 - pp])
        _, trace = iterate_distribution([K] * p["n_max"], DiscreteDistribution([1.0, 0.0]))
        err = max(abs(trace.spread[j] - abs(2 * pp - 1) ** j) for j in range(p["n_max"] + 1))
        rows.append(_row("shuffle", {"p": pp, "n_max": p["n_max"]}, "spread_error", err, 0.0, 1e-12))
    if p["part"] in ("contraction", "all"):
        holds = monotone = 0
        count = p["kernels"]
        for i in range(count):
            r = rng.child(100 + i)
            k = 2 + int((p["k_max"] - 1) * r.random())
            if i % 2:
                kernels = [random_kernel(k, r.child(j)) for j in range(p["steps"])]
            else:
                kernels = [random_kernel(k, r.child(0))] * p["steps"]
            p0 = DiscreteDistribution.normalized(r.random(k) ** 4 + 1e-9)
            cert = borel_contraction_certificate(kernels, p0)
            holds += cert.holds
            monotone += cert.trace.is_monotone()
        key = {"kernels": count, "k_max": p["k_max"], "steps": p["steps"]}
        rows.append(_row("shuffle", key, "certificate_holds", holds, count, 0))
        rows.append(_row("shuffle", key, "envelope_monotone", monotone, count, 0))
        K7 = TransitionKernel([[0.7, 0.3], [0.3, 0.7]])
        cert = borel_contraction_certificate([K7] * 20, DiscreteDistribution([1.0, 0.0]))
        gap = max(abs(r.spread - r.bound) for r in cert.rows)
        rows.append(_row("shuffle", {"kernel": "symmetric-0.7", "steps": 20}, "saturation_gap", gap, 0.0, 1e-12))
        _, trace = iterate_distribution([K7] * p["n"], DiscreteDistribution([1.0, 0.0]))
        rows.append(_row("shuffle", {"kernel": "symmetric-0.7", "n": p["n"]}, "spread", float(trace.spread[-1])))
    return rows


# -- needle ---------------------------------------------------------------------

def _needle(p: dict, rng: RngStream) -> list:
    from .needle import (NeedleConfig, crossing_probability_exact, crossing_probability_mc,
                         segmentation_convergence_check)
    from .numerics import DensityGrid

    rows = []
    a, b = 1.0, p["ratio"]
    buffon = 2 * b / (math.pi * a)
    sigma3 = 3 * math.sqrt(buffon * (1 - buffon) / p["N"])
    uni = NeedleConfig.on_table(a, b, 1)
    within = sum(abs(crossing_probability_mc(uni, p["N"], rng.child(i)) - buffon) <= sigma3
                 for i in range(p["seeds"]))
    rows.append(_row("needle", {"N": p["N"], "seeds": p["seeds"]}, "mc_within_3sigma",
                     within / p["seeds"], 1.0, 1.0 - p["min_fraction"]))
    bump = lambda u, v: np.exp(-((u - 0.5) ** 2 + (v - 0.5) ** 2) / (2 * 0.15**2))
    cfg = NeedleConfig.on_table(a, b, p["table_n"], bump)
    rows.append(_row("needle", {"density": "gaussian-bump", "n": p["table_n"]}, "exact_probability",
                     crossing_probability_exact(cfg), buffon, 0.01))
    phi = DensityGrid.from_function_2d(lambda x, y: x + y, (0, 1), (0, 1), shape=(2, 2))
    seg = segmentation_convergence_check(phi, 0.5, p["m_ladder"])
    scaled = []
    for r in seg:
        key = {"phi": "x+y", "lam": 0.5, "m": r.m}
        if r.m == 4:
            rows.append(_row("needle", key, "segmentation_error", r.error, 0.0625, 1e-10))
        else:
            rows.append(_row("needle", key, "segmentation_error", r.error, None, r.bound))
        scaled.append(r.error * math.sqrt(r.m))
    if len(scaled) > 1:
        rows.append(_row("needle", {"phi": "x+y", "lam": 0.5}, "sqrt_m_scaled_spread",
                         max(scaled) / min(scaled), 1.0, 0.1))
    return rows


def _needle_checks(p):
    for m in p["m_ladder"]:
        if math.isqrt(m) ** 2 != m:
            raise ValueError("m_ladder must hold perfect squares")
    if any(b <= a for a, b in zip(p["m_ladder"], p["m_ladder"][1:])):
        raise ValueError("m_ladder must be increasing")


# -- limits ---------------------------------------------------------------------

def _limits(p: dict, rng: RngStream) -> list:
    from .limits import MaximumProfile, moment_identity_check, laplace_ratio

    rows = []
    if p["part"] in ("laplace", "all"):
        one = lambda z: np.ones_like(z)
        profiles = (
            ("shifted", MaximumProfile(lambda z: -(z - 1) ** 2, -5, 5), lambda z: z + 2, 3.0),
            ("centred", MaximumProfile(lambda z: -z * z, -5, 5), lambda z: 1 + z * z, 1.0),
        )
        ladder = sorted(p["p_ladder"])
        for name, prof, phi1, target in profiles:
            errs = []
            for q in ladder:
                ratio = laplace_ratio(phi1, one, prof, q)
                errs.append(abs(ratio - target))
                key = {"profile": name, "p": q}
                if q == ladder[-1]:
                    rows.append(_row("limits", key, "laplace_ratio", ratio, target, p["tol"]))
                else:
                    rows.append(_row("limits", key, "laplace_ratio", ratio, target))
                rows.append(_row("limits", key, "laplace_error", errs[-1]))
            ok, worst = _strictly_decreasing(errs, floor=1e-12)
            rows.append(_row("limits", {"profile": name}, "laplace_ladder_decreasing", worst, passed=ok))
    if p["part"] in ("moment", "all"):
        m = moment_identity_check(p["h"], p["n"], p["y0"], p["P"])
        key = {"h": p["h"], "n": p["n"], "y0": p["y0"], "P": p["P"]}
        rows.append(_row("limits", key, "moment_quadrature", m.lhs_quadrature, m.lhs, 1e-8))
        if math.isfinite(m.series):
            rows.append(_row("limits", key, "moment_series_euler", m.series, m.lhs, p["series_tol"]))
            rows.append(_row("limits", key, "moment_series_partial_sum", m.raw_series, m.lhs, p["series_tol"]))
    return rows


def _strictly_decreasing(values, floor=0.0):
    """Consecutive values strictly decrease, entries at or below ``floor`` counting as converged."""
    worst, ok = 0.0, True
    for a, b in zip(values, values[1:]):
        if b <= floor:
            continue
        if a <= floor:
            ok = False
            worst = math.inf
            continue
        worst = max(worst, b / a)
        ok &= b < a
    return ok, worst


# -- sphere ---------------------------------------------------------------------

def _sphere(p: dict, rng: RngStream) -> list:
    from .limits import sphere_marginal_cdf, sphere_normal_gap, sphere_samples
    from .numerics import ks_statistic
    from scipy import stats

    rows, normal = [], []
    for n in p["n"]:
        x = sphere_samples(n, 1, p["N"], rng.child(n))[:, 0]
        key = {"n": n, "N": p["N"]}
        rows.append(_row("sphere", key, "ks_exact", ks_statistic(x, lambda t: sphere_marginal_cdf(t, n)),
                         None, p["tol_exact"]))
        ks = ks_statistic(x, stats.norm.cdf)
        normal.append(ks)
        rows.append(_row("sphere", key, "ks_normal", ks, sphere_normal_gap(n), p["tol_normal"]))
    if len(normal) > 1:
        ok, worst = _strictly_decreasing(normal)
        rows.append(_row("sphere", {"n": "ladder"}, "ks_normal_decreasing", worst, passed=ok))
    return rows


# -- kelvin ---------------------------------------------------------------------

def _kelvin_system(p: dict):
    from .kelvin import KelvinSystem

    return KelvinSystem(p["L"], p["H"], p["F"], (p["m_A"], p["m_B"], p["m_C"]), tuple(p["x"]), tuple(p["v"]))


def _kelvin(p: dict, rng: RngStream) -> list:
    from .kelvin import equipartition_ladder, simulate, time_reversal_error

    base = _kelvin_system(p)
    system = base.jittered(rng.child(0), p["jitter"]) if p["jitter"] > 0 else base
    rows = []
    run = simulate(system, math.inf, record=False, max_events=p["events"])
    rows.append(_row("kelvin", {"events": run.events}, "energy_drift", run.relative_energy_drift, None, 1e-9))
    rows.append(_row("kelvin", {"T": p["reversal_T"]}, "reversal_error",
                     time_reversal_error(system, p["reversal_T"]), None, 1e-6))
    ladder = equipartition_ladder(system, p["ladder"], jitter=0.0)
    for r in ladder:
        rows.append(_row("kelvin", {"T": r.T}, "equipartition_ratio", r.ratio, 1.0))
        rows.append(_row("kelvin", {"T": r.T}, "ratio_deviation", r.deviation))
    devs = [r.deviation for r in ladder]
    if len(devs) > 1:
        worst = max(b / a if a > 0 else math.inf for a, b in zip(devs, devs[1:]))
        rows.append(_row("kelvin", {"slack": p["slack"]}, "deviation_ladder_ratio", worst, None, 1 + p["slack"]))
    # the observed spread is what a tolerance at the longest horizon would have to be
    rows.append(_row("kelvin", {"T": ladder[-1].T}, "recalibrated_tolerance", devs[-1]))
    return rows


def _kelvin_checks(p):
    from .errors import ConfigError

    if len(p["x"]) != 3 or len(p["v"]) != 3:
        raise ValueError("x and v must have three entries")
    try:
        _kelvin_system(p)
    except ConfigError as exc:
        raise ValueError(str(exc)) from None


def _real3(default):
    ok = lambda v: isinstance(v, list) and len(v) == 3 and all(_is_real(x) for x in v)
    return Param(default, lambda v: None if ok(v) else "a list of three numbers")


# -- registry -------------------------------------------------------------------

EXPERIMENTS: dict[str, Experiment] = {
    "recurrence": Experiment("recurrence", {
        "map": choice("cat", "cat", "baker", "rotation", "identity"),
        "alpha": real(0.6180339887498949, 0.0, 1.0, hi_open=True),
        "side": real(0.1, 0.0, 1.0, lo_open=True),
        "k": integer(1, 1),
        "T": integer(1, 1000),
        "m": integer(1, 10_000),
        "min_fraction": real(0.999, 0.0, 1.0),
        "configs": integer(0, 100),
        "config_samples": integer(1, 1000),
    }, _recurrence, primary="non_return", cross_checks=(_recurrence_checks,)),
    "wheel": Experiment("wheel", {
        "M": integer(1, 100),
        "theta": positive(1.0),
        "density": choice("random-lipschitz", "random-lipschitz", "uniform", "ramp"),
        "densities": integer(1, 200),
        "nodes": integer(2, 8193),
        "halving_from": integer(1, 100),
    }, _wheel, primary="bound", summary="halving"),
    "planets": Experiment("planets", {
        "times": real_list([10.0, 100.0, 1000.0]),
        "bins": integer(16, 1024),
        "tol": positive(1e-4),
        "tv_time": positive(1000.0),
        "tv_max": positive(0.01),
    }, _planets, primary="tv_to_uniform"),
    "halfcircle": Experiment("halfcircle", {
        "n": int_list([1, 2, 3], 1),
        "T": positive(1e5),
        "steps": integer(1000, 1_000_000),
        "tol": positive(0.02),
    }, _halfcircle, primary="time_average", cross_checks=(_halfcircle_checks,)),
    "shuffle": Experiment("shuffle", {
        "part": choice("all", "all", "two-card", "contraction"),
        "p": real(0.9, 0.0, 1.0),
        "n": integer(0, 3),
        "N": integer(1, 1_000_000),
        "tol": positive(0.004),
        "n_max": integer(1, 50),
        "kernels": integer(1, 50),
        "k_max": integer(2, 24),
        "steps": integer(1, 30),
    }, _shuffle, primary="spread"),
    "needle": Experiment("needle", {
        "ratio": real(0.5, 0.0, 1.0, lo_open=True, hi_open=True),
        "N": integer(1, 1_000_000),
        "seeds": integer(1, 100),
        "min_fraction": real(0.99, 0.0, 1.0),
        "table_n": integer(1, 8),
        "m_ladder": int_list([4, 16, 64, 256, 1024, 4096], 1),
    }, _needle, primary="segmentation_error", cross_checks=(_needle_checks,)),
    "limits": Experiment("limits", {
        "part": choice("all", "all", "laplace", "moment"),
        "p_ladder": real_list([100.0, 1000.0, 10000.0]),
        "tol": positive(1e-3),
        "h": positive(1.0),
        "n": real(1.0, 0.0),
        "y0": real(0.0),
        "P": integer(1, 30),
        "series_tol": positive(1e-4),
    }, _limits, primary="laplace_error", summary="decreasing"),
    "sphere": Experiment("sphere", {
        "n": int_list([3, 1000], 2),
        "N": integer(1000, 100_000),
        "tol_exact": positive(0.01),
        "tol_normal": positive(0.01),
    }, _sphere, primary="ks_normal", summary="decreasing"),
    "kelvin": Experiment("kelvin", {
        "L": positive(1.0),
        "H": real(0.25, 0.0),
        "F": real(1.0, 0.0),
        "m_A": positive(1.0),
        "m_B": positive(1000.0),
        "m_C": positive(1.0),
        "x": _real3([0.2, 0.5, 0.8]),
        "v": _real3([1.0, 0.0, -0.7]),
        "jitter": real(1e-3, 0.0, 0.1),
        "events": integer(1, 1_000_000),
        "reversal_T": positive(1000.0),
        "ladder": real_list([1e4, 1e5, 1e6]),
        "slack": real(0.2, 0.0),
    }, _kelvin, primary="ratio_deviation", summary="slack20", cross_checks=(_kelvin_checks,)),
}


def run_experiment(name: str, params: dict, rng: RngStream) -> list:
    return EXPERIMENTS[name].run(params, rng)


def summary_row(name: str, key: str, ladder: list, values: list) -> ReportRow:
    """Monotonicity verdict for the primary statistic along a sweep ladder."""
    exp = EXPERIMENTS[name]
    stat = f"{exp.primary}_{exp.summary}"
    pk = {key: "ladder"}
    if exp.summary == "halving":
        # per-doubling factor of the statistic along a doubling-or-coarser ladder of M
        factors = []
        for (x0, a), (x1, b) in zip(zip(ladder, values), zip(ladder[1:], values[1:])):
            if a > 0 and b > 0:
                f = b / a
                if key == "M":
                    f = f ** (math.log(2) / math.log(x1 / x0))
                factors.append(f)
        worst = max(factors, key=lambda f: abs(f - 0.5), default=math.nan)
        return _row(name, pk, stat, worst, 0.5, 0.1)
    if exp.summary == "decreasing":
        ok, worst = _strictly_decreasing(values, floor=1e-12)
        return _row(name, pk, stat, worst, passed=ok)
    slack = 0.2 if exp.summary == "slack20" else 0.0
    worst = max((b / a if a > 0 else (0.0 if b <= 0 else math.inf) for a, b in zip(values, values[1:])), default=0.0)
    return _row(name, pk, stat, worst, None, 1 + slack)
