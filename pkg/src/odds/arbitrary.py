"""Method of arbitrary functions: roulette wheel, small planets, half-circle problem."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import DensityGrid, DiscreteDistribution, fourier_magnitude, tv_distance
from .rng import RngStream

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WheelModel:
    """A wheel swept through ``total_angle`` with alternating sectors of width
    ``sector_width``; sector ``i`` covers ``[i*eps, (i+1)*eps)`` and is red when
    ``i`` is even."""

    total_angle: float
    sector_width: float
    phi: DensityGrid

    def __post_init__(self):
        if not self.total_angle > 0 or not self.sector_width > 0:
            raise ValueError("total_angle and sector_width must be positive")
        ratio = self.total_angle / (2 * self.sector_width)
        M = round(ratio)
        if M < 1 or abs(ratio - M) > 1e-9 * ratio:
            raise ValueError(f"total_angle / (2 * sector_width) = {ratio} is not a positive integer")
        if self.phi.ndim != 1:
            raise ValueError("phi must be a 1-D density")
        lo, hi = self.phi.support[0]
        if abs(lo) > 1e-12 or abs(hi - self.total_angle) > 1e-12 * max(1.0, self.total_angle):
            raise ValueError("phi must live on [0, total_angle]")

    @classmethod
    def with_pairs(cls, total_angle: float, M: int, phi: DensityGrid) -> "WheelModel":
        if int(M) < 1:
            raise ValueError("M must be >= 1")
        return cls(float(total_angle), total_angle / (2 * int(M)), phi)

    @property
    def pairs(self) -> int:
        return round(self.total_angle / (2 * self.sector_width))

    def edges(self) -> np.ndarray:
        return self.total_angle * np.arange(2 * self.pairs + 1) / (2 * self.pairs)


def red_probability(model: WheelModel) -> float:
    """Mass of ``phi`` on the red sectors (exact for the interpolated density)."""
    e = model.edges()
    F = model.phi.cdf(e)
    return float(np.sum(F[1::2] - F[0:-1:2]))


def red_black_bound(model: WheelModel) -> float:
    """``sum_k (M_k - m_k) * eps`` over the red/black double intervals.

    ``M_k`` and ``m_k`` are the extremes of the interpolated density on double
    interval ``k``: the grid nodes inside it and the two interpolated end
    values, which makes ``|red_probability - 1/2| <= bound / 2`` rigorous.
    """
    phi, eps = model.phi, model.sector_width
    edges = model.edges()[::2]
    nodes, vals = phi.nodes, phi.values
    ev = phi(edges)
    hi = np.maximum(ev[:-1], ev[1:])
    lo = np.minimum(ev[:-1], ev[1:])
    start = np.searchsorted(nodes, edges[:-1], side="right")
    stop = np.searchsorted(nodes, edges[1:], side="left")
    inner = stop > start
    if inner.any():
        padded = np.append(vals, 0.0)
        idx = np.column_stack([start[inner], stop[inner]]).ravel()
        hi[inner] = np.maximum(hi[inner], np.maximum.reduceat(padded, idx)[::2])
        lo[inner] = np.minimum(lo[inner], np.minimum.reduceat(padded, idx)[::2])
    return float(np.sum(hi - lo) * eps)


@dataclass(frozen=True)
class PlanetModel:
    """Joint density of mean motion ``a`` and initial longitude ``b``, and a time ``t``.

    ``phi_ab`` is a 2-D density on ``[a_lo, a_hi] x [0, 2 pi)``, periodic in ``b``.
    """

    phi_ab: DensityGrid
    t: float = 0.0

    def __post_init__(self):
        if self.phi_ab.ndim != 2:
            raise ValueError("phi_ab must be a 2-D density")
        (a_lo, a_hi), (b_lo, b_hi) = self.phi_ab.support
        if not a_hi > a_lo:
            raise ValueError("need a_hi > a_lo")
        if not self.phi_ab.periodic[1] or abs(b_lo) > 1e-12 or abs(b_hi - TWO_PI) > 1e-9:
            raise ValueError("the b axis must be the periodic circle [0, 2 pi)")
        if self.t < 0:
            raise ValueError("t must be >= 0")

    def at(self, t: float) -> "PlanetModel":
        return PlanetModel(self.phi_ab, float(t))


def longitude_law(model: PlanetModel, bins: int = 1024, chunk: int = 512) -> DensityGrid:
    """Density of the longitude ``(a t + b) mod 2 pi`` at time ``model.t``.

    Node ``j`` of the result carries the exact probability of the bin of width
    ``2 pi / bins`` centred on it (divided by the bin width).  The ``b``
    integral over each shifted bin is exact; the ``a`` integral uses 8-point
    Gauss-Legendre on sub-cells short enough that ``a t`` turns by at most a
    quarter circle across each.
    """
    if bins < 8:
        raise ValueError("bins must be >= 8")
    phi, t = model.phi_ab, model.t
    ax_a, ax_b = phi.axes
    sub = max(1, math.ceil(t * ax_a.h / (math.pi / 2)))
    gx, gw = np.polynomial.legendre.leggauss(8)
    s = (np.arange(sub)[:, None] + 0.5 * (gx[None, :] + 1.0)) / sub
    lam = s.ravel()
    w = np.tile(gw, sub) * ax_a.h / (2 * sub)
    cells = np.repeat(np.arange(ax_a.ncells), lam.size)
    lam_q = np.tile(lam, ax_a.ncells)
    w_q = np.tile(w, ax_a.ncells)
    a_q = ax_a.lo + ax_a.h * (cells + lam_q)
    width = TWO_PI / bins
    edges = width * (np.arange(bins + 1) - 0.5)
    mass = np.zeros(bins)
    vals = phi.values
    for c0 in range(0, a_q.size, chunk):
        sl = slice(c0, c0 + chunk)
        shift = np.mod(a_q[sl] * t, TWO_PI)
        U = edges[None, :] - shift[:, None]
        G0 = ax_b.antiderivative(vals[cells[sl]], U)
        G1 = ax_b.antiderivative(vals[cells[sl] + 1], U)
        G = (1 - lam_q[sl])[:, None] * G0 + lam_q[sl][:, None] * G1
        mass += w_q[sl] @ np.diff(G, axis=1)
    mass = np.maximum(mass, 0.0)
    return DensityGrid((0.0, TWO_PI), mass / width, periodic=True)


def _bin_distribution(psi: DensityGrid) -> DiscreteDistribution:
    return DiscreteDistribution.normalized(psi.values)


def tv_to_uniform(psi: DensityGrid) -> float:
    """Total variation between the binned longitude law and the uniform law."""
    p = _bin_distribution(psi)
    return tv_distance(p, DiscreteDistribution.uniform(len(p)))


@dataclass(frozen=True)
class UniformizationRow:
    t: float
    n: int
    magnitude: float
    tv: float


def uniformization_report(model: PlanetModel, times: Sequence[float], n_max: int,
                          bins: int = 1024) -> list[UniformizationRow]:
    """Fourier magnitudes ``|c_n|`` (n = 1..n_max) and TV to uniform for each time."""
    times = list(times)
    if not times:
        raise ValueError("times must be nonempty")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rows = []
    for t in times:
        psi = longitude_law(model.at(t), bins)
        tv = tv_to_uniform(psi)
        for n in range(1, n_max + 1):
            rows.append(UniformizationRow(float(t), n, fourier_magnitude(psi, n), tv))
    return rows


def product_c1(t: float) -> float:
    """``|c_1|`` of the longitude law for a uniform on [0, 1] times (1 + cos b) / (2 pi)."""
    x = t / 2
    return 0.5 * abs(math.sin(x) / x) if x else 0.5


def half_circle_time_average(a: Sequence[float], b: Sequence[float], T: float, steps: int = 10**6,
                             arc_start: float = 0.0, chunk: int = 1 << 17) -> float:
    """Fraction of ``[0, T]`` (midpoint rule) during which every longitude
    ``a_i t + b_i`` lies in the half circle ``[arc_start, arc_start + pi)``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("need at least one planet")
    if a.size != b.size:
        raise ValueError("a and b must have equal length")
    if np.unique(a).size != a.size:
        raise ValueError("mean motions must be pairwise distinct")
    if steps < 1000:
        raise ValueError("steps must be >= 1000")
    if not T > 0:
        raise ValueError("T must be positive")
    dt = T / steps
    hits = 0
    for s0 in range(0, steps, chunk):
        t = (np.arange(s0, min(s0 + chunk, steps)) + 0.5) * dt
        phase = np.mod(np.outer(t, a) + (b - arc_start), TWO_PI)
        hits += int(np.count_nonzero(np.all(phase < math.pi, axis=1)))
    return hits / steps


def half_circle_uncertain(a: Sequence[float], b: Sequence[float], eps: float, T: float,
                          rng: RngStream, draws: int = 16, steps: int = 10**6) -> float:
    """Time average with each mean motion known only to within ``eps``:
    ``a_i`` is drawn uniformly from ``[a_i - eps/2, a_i + eps/2)`` per draw."""
    a = np.asarray(a, dtype=float)
    total = 0.0
    for _ in range(draws):
        ai = a + eps * (rng.random(a.size) - 0.5)
        total += half_circle_time_average(ai, b, T, steps)
    return total / draws
