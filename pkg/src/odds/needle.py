"""Buffon's needle with an arbitrary centre density, and Hostinsky's segmentation limit.

Geometry: the parallels are the vertical lines ``x = 2 a j``; the needle has
half-length ``b < a``; its centre falls in the square ``[0, 2 n a]^2`` with
density ``phi``; the angle ``omega`` between the needle and the normal to the
lines is uniform on ``[0, pi/2)``.  The needle meets a line iff the distance
from its centre to the nearest line is at most ``b cos(omega)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numerics import DensityGrid
from .rng import RngStream


@dataclass(frozen=True)
class NeedleConfig:
    a: float
    b: float
    n: int
    phi: DensityGrid

    def __post_init__(self):
        if not 0 < self.b < self.a:
            raise ValueError("need 0 < b < a")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.phi.ndim != 2:
            raise ValueError("phi must be a 2-D density on the table")
        side = self.side
        for lo, hi in self.phi.support:
            if abs(lo) > 1e-12 * side or abs(hi - side) > 1e-12 * side:
                raise ValueError(f"phi must live on the table [0, {side}]^2")

    @property
    def side(self) -> float:
        return 2 * self.n * self.a

    @classmethod
    def on_table(cls, a: float, b: float, n: int, f: Callable | None = None,
                 shape=(257, 257)) -> "NeedleConfig":
        """Config whose density is ``f(u, v)`` on the unit square stretched to the table."""
        side = 2 * n * a
        if f is None:
            phi = DensityGrid.uniform_2d((0, side), (0, side))
        else:
            phi = DensityGrid.from_function_2d(lambda x, y: f(x / side, y / side), (0, side), (0, side), shape)
        return cls(float(a), float(b), int(n), phi)

    @property
    def buffon(self) -> float:
        return 2 * self.b / (math.pi * self.a)


def crossing_probability_mc(config: NeedleConfig, N: int, rng: RngStream) -> float:
    """Fraction of ``N`` random throws whose needle meets a line."""
    if N < 1:
        raise ValueError("N must be >= 1")
    # only the distance to the lines matters, so draw x from its exact marginal
    x = config.phi.marginal(0).sample(rng, N)
    omega = 0.5 * math.pi * rng.random(N)
    two_a = 2 * config.a
    d = np.abs(x - two_a * np.round(x / two_a))
    return float(np.count_nonzero(d <= config.b * np.cos(omega))) / N


def _A(u):
    return u * np.arccos(u) - np.sqrt(1 - u * u)


def _B(u):
    return ((2 * u * u - 1) * np.arccos(u) - u * np.sqrt(1 - u * u)) / 4


def crossing_probability_exact(config: NeedleConfig) -> float:
    """Exact crossing probability for the interpolated density.

    The centre's x-marginal is piecewise linear; on each piece between cell
    edges, lines and the points at distance ``b`` from the lines, the
    integrand is ``(alpha + beta x) (2/pi) arccos(d/b)`` with ``d`` linear in
    ``x``, integrated in closed form.
    """
    a, b = config.a, config.b
    mx = config.phi.marginal(0)
    ax = mx.axes[0]
    lines = 2 * a * np.arange(config.n + 1)
    cuts = np.concatenate([ax.nodes, lines, lines - b, lines + b])
    cuts = np.unique(np.clip(cuts, ax.lo, ax.hi))
    x0, x1 = cuts[:-1], cuts[1:]
    mid = 0.5 * (x0 + x1)
    j = np.clip(np.floor((mid - ax.lo) / ax.h).astype(np.int64), 0, ax.ncells - 1)
    xl = ax.lo + ax.h * j
    vl, vr = mx.values[j], mx.values[j + 1]
    beta = (vr - vl) / ax.h
    alpha = vl - beta * xl
    c = 2 * a * np.round(mid / (2 * a))
    right = mid >= c
    near = np.abs(mid - c) < b
    # right of a line: u = (x - c)/b increasing; left: u = (c - x)/b decreasing
    s = np.where(right, 1.0, -1.0)
    u0 = np.clip(s * (x0 - c) / b, 0.0, 1.0)
    u1 = np.clip(s * (x1 - c) / b, 0.0, 1.0)
    lin = alpha + beta * c
    val = s * b * (lin * (_A(u1) - _A(u0)) + s * beta * b * (_B(u1) - _B(u0)))
    return float((2 / math.pi) * np.sum(np.where(near, val, 0.0)))


@dataclass(frozen=True)
class Segmentation:
    """``m = s * s`` equal cells tiling ``domain``; the white part of each cell is
    its left ``lam`` fraction (``rule="left"``) or bottom ``lam`` fraction (``rule="bottom"``)."""

    domain: tuple
    m: int
    lam: float
    rule: str = "left"

    def __post_init__(self):
        s = math.isqrt(self.m)
        if self.m < 1 or s * s != self.m:
            raise ValueError("m must be a perfect square")
        if not 0 < self.lam < 1:
            raise ValueError("lam must lie in (0, 1)")
        if self.rule not in ("left", "bottom"):
            raise ValueError("rule must be 'left' or 'bottom'")

    @property
    def side_cells(self) -> int:
        return math.isqrt(self.m)

    @property
    def cell_volume(self) -> float:
        (x0, x1), (y0, y1) = self.domain
        return (x1 - x0) * (y1 - y0) / self.m

    def white_strips(self) -> tuple[int, np.ndarray, np.ndarray]:
        """Axis and the ``[lo, hi)`` ends of the white strips along it.

        White parts of cells in one column (or row) line up into one strip.
        """
        axis = 0 if self.rule == "left" else 1
        lo, hi = self.domain[axis]
        s = self.side_cells
        starts = lo + (hi - lo) * np.arange(s) / s
        return axis, starts, starts + self.lam * (hi - lo) / s


def white_integral(seg: Segmentation, phi: DensityGrid) -> float:
    axis, lo, hi = seg.white_strips()
    other = phi.axes[1 - axis]
    w_other = other.interval_weights(*seg.domain[1 - axis])
    marg = phi.values @ w_other if axis == 0 else w_other @ phi.values
    F = phi.axes[axis].antiderivative(marg, np.concatenate([lo, hi]))[0]
    return float(np.sum(F[lo.size:] - F[:lo.size]))


def hostinsky_segmentation_error(seg: Segmentation, phi: DensityGrid) -> float:
    """``|integral of phi over the white parts - lam * integral over the domain|``."""
    (x0, x1), (y0, y1) = seg.domain
    total = phi.integrate_box(x0, x1, y0, y1)
    return abs(white_integral(seg, phi) - seg.lam * total)


def _block_extremes(V, idx, axis):
    hi = np.maximum.reduceat(V, idx[:-1], axis=axis)
    lo = np.minimum.reduceat(V, idx[:-1], axis=axis)
    edge = np.take(V, idx[1:], axis=axis)
    return np.maximum(hi, edge), np.minimum(lo, edge)


def darboux_bound(seg: Segmentation, phi: DensityGrid) -> float:
    """``lam * sum over cells of (sup - inf) * cell volume``.

    Bounds the segmentation error, since both the white integral and ``lam``
    times the cell integral lie in ``[lam inf eps, lam sup eps]``.  The
    extremes are exact for the bilinear interpolant: every cell splits along
    grid lines into rectangles whose corners carry them.
    """
    s = seg.side_cells
    pts, starts = [], []
    for (lo, hi), ax in zip(seg.domain, phi.axes):
        edges = lo + (hi - lo) * np.arange(s + 1) / s
        inner = ax.nodes[(ax.nodes > lo) & (ax.nodes < hi)]
        p = np.unique(np.concatenate([edges, inner]))
        pts.append(p)
        starts.append(np.searchsorted(p, edges))
    X, Y = np.meshgrid(pts[0], pts[1], indexing="ij")
    V = phi(X, Y)
    hx, lx = _block_extremes(V, starts[0], 0)
    hi, _ = _block_extremes(hx, starts[1], 1)
    _, lo = _block_extremes(lx, starts[1], 1)
    return float(seg.lam * np.sum(hi - lo) * seg.cell_volume)


@dataclass(frozen=True)
class SegmentationRow:
    m: int
    error: float
    bound: float


def segmentation_convergence_check(phi: DensityGrid, lam: float, m_ladder: Sequence[int],
                                   domain=None, rule: str = "left") -> list[SegmentationRow]:
    """Segmentation error and its Darboux bound along an increasing ladder of cell counts.

    The bound is nonincreasing whenever each partition refines the previous
    one (e.g. ``m = 4**j``) and tends to zero for any Riemann-integrable
    density, discontinuous ones included.
    """
    m_ladder = [int(m) for m in m_ladder]
    if not m_ladder or any(b <= a for a, b in zip(m_ladder, m_ladder[1:])):
        raise ValueError("m_ladder must be nonempty and increasing")
    domain = domain if domain is not None else phi.support
    rows = []
    for m in m_ladder:
        seg = Segmentation(domain, m, lam, rule)
        rows.append(SegmentationRow(m, hostinsky_segmentation_error(seg, phi), darboux_bound(seg, phi)))
    return rows


def nonincreasing_with_slack(values: Sequence[float], slack: float = 0.1, floor: float = 0.0) -> bool:
    """``v[i+1] <= (1 + slack) v[i]`` for consecutive entries, ignoring entries at or below ``floor``."""
    return all(b <= (1 + slack) * a or b <= floor for a, b in zip(values, values[1:]))
