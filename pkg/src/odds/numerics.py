"""Grid densities, quadrature and distribution distances.

Densities are tabulated on uniform grids and always mean the piecewise-linear
(bilinear in 2-D) interpolant of the node values.  The trapezoid rule is the
exact integral of that interpolant, so every integral, marginal, moment and
inverse-CDF draw below is consistent with every other one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, EvaluationError
from .rng import RngStream

DEFAULT_NODES = 4096


class _Axis:
    """One grid axis: node layout, cells and exact interpolant integrals."""

    def __init__(self, lo: float, hi: float, n: int, periodic: bool):
        lo, hi, n = float(lo), float(hi), int(n)
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            raise ValueError(f"invalid axis [{lo}, {hi})")
        self.lo, self.hi, self.n, self.periodic = lo, hi, n, bool(periodic)
        self.degenerate = hi == lo
        if self.degenerate:
            if n != 1 or periodic:
                raise ValueError("a zero-width axis holds exactly one non-periodic node")
            self.h = 0.0
            self.nodes = np.array([lo])
            self.ncells = 0
            self.trap = np.ones(1)
            return
        if periodic:
            if n < 2:
                raise ValueError("periodic axis needs at least 2 nodes")
            self.h = (hi - lo) / n
            self.nodes = lo + self.h * np.arange(n)
            self.ncells = n
            self.trap = np.full(n, self.h)
        else:
            if n < 2:
                raise ValueError("interval axis needs at least 2 nodes")
            self.h = (hi - lo) / (n - 1)
            self.nodes = np.linspace(lo, hi, n)
            self.ncells = n - 1
            self.trap = np.full(n, self.h)
            self.trap[0] = self.trap[-1] = 0.5 * self.h
        self.left = np.arange(self.ncells)
        self.right = (self.left + 1) % n

    @property
    def period(self) -> float:
        return self.hi - self.lo

    def _add_piece(self, w: np.ndarray, s: float, e: float) -> None:
        x0 = self.lo + self.h * self.left
        a = np.clip(s - x0, 0.0, self.h)
        b = np.clip(e - x0, 0.0, self.h)
        q = (b * b - a * a) / (2.0 * self.h)
        np.add.at(w, self.left, (b - a) - q)
        np.add.at(w, self.right, q)

    def interval_weights(self, u0: float, u1: float) -> np.ndarray:
        """Weights ``w`` with ``w @ values`` = integral of the interpolant on [u0, u1)."""
        w = np.zeros(self.n)
        if u1 <= u0:
            return w
        if self.degenerate:
            if u0 <= self.lo < u1:
                w[0] = 1.0
            return w
        if self.periodic:
            k, r = divmod(u1 - u0, self.period)
            w += k * self.trap
            s = self.lo + (u0 - self.lo) % self.period
            e = s + r
            if e <= self.hi:
                self._add_piece(w, s, e)
            else:
                self._add_piece(w, s, self.hi)
                self._add_piece(w, self.lo, e - self.period)
        else:
            s, e = max(u0, self.lo), min(u1, self.hi)
            if e > s:
                self._add_piece(w, s, e)
        return w

    def locate(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell index, offset inside the cell, and whole periods skipped."""
        u = np.asarray(u, dtype=float)
        if self.periodic:
            k = np.floor((u - self.lo) / self.period)
            r = u - self.lo - k * self.period
        else:
            k = np.zeros_like(u)
            r = np.clip(u, self.lo, self.hi) - self.lo
        j = np.clip(np.floor(r / self.h).astype(np.int64), 0, self.ncells - 1)
        tau = np.clip(r - j * self.h, 0.0, self.h)
        return j, tau, k

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """Running integral at cell boundaries along the last axis."""
        vl = values[..., self.left]
        vr = values[..., self.right]
        cm = 0.5 * self.h * (vl + vr)
        zero = np.zeros(values.shape[:-1] + (1,))
        return np.concatenate([zero, np.cumsum(cm, axis=-1)], axis=-1)

    def antiderivative(self, values: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Integral of the interpolant from ``lo`` to ``u`` (rows broadcast)."""
        values = np.atleast_2d(values)
        cum = self.cumulative(values)
        u = np.asarray(u, dtype=float)
        u2 = np.broadcast_to(u, (values.shape[0],) + u.shape[-1:]) if u.ndim <= 1 else u
        j, tau, k = self.locate(u2)
        vl = np.take_along_axis(values, self.left[j], axis=-1)
        vr = np.take_along_axis(values, self.right[j], axis=-1)
        base = np.take_along_axis(cum, j, axis=-1)
        g = base + vl * tau + (vr - vl) * tau * tau / (2.0 * self.h)
        return g + k * cum[:, -1:]

    def offset_in_cell(self, j: np.ndarray, vl: np.ndarray, vr: np.ndarray, rem: np.ndarray) -> np.ndarray:
        """Point inside cell ``j`` where the linear density ``vl -> vr`` has
        accumulated mass ``rem`` from the left cell edge."""
        slope = (vr - vl) / self.h
        disc = np.maximum(vl * vl + 2.0 * slope * rem, 0.0)
        denom = vl + np.sqrt(disc)
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = np.where(denom > 0, 2.0 * rem / denom, 0.0)
        return self.lo + j * self.h + np.clip(tau, 0.0, self.h)


class DensityGrid:
    """Nonnegative density tabulated on a uniform 1-D or 2-D grid.

    The values are normalized at construction so the interpolant integrates
    to one.  A zero-width 1-D support (``lo == hi``) with a single node is a
    point mass.
    """

    def __init__(self, support, values, periodic=False):
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            support = [tuple(map(float, support))]
        elif values.ndim == 2:
            support = [tuple(map(float, s)) for s in support]
        else:
            raise DimensionError("DensityGrid supports 1 or 2 dimensions")
        if len(support) != values.ndim:
            raise DimensionError("support does not match value dimensions")
        if isinstance(periodic, (bool, np.bool_)):
            periodic = (bool(periodic),) * values.ndim
        periodic = tuple(bool(p) for p in periodic)
        if len(periodic) != values.ndim:
            raise DimensionError("one periodic flag per axis")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("density values must be finite and nonnegative")
        self.axes = tuple(_Axis(lo, hi, n, p) for (lo, hi), n, p in zip(support, values.shape, periodic))
        total = self._trapezoid(values)
        if not total > 0:
            raise ValueError("density has zero mass")
        values = values / total
        values.setflags(write=False)
        self.values = values

    # -- construction helpers -------------------------------------------------
    @classmethod
    def from_function(cls, f, lo, hi, n: int = DEFAULT_NODES, periodic: bool = False):
        axis = _Axis(lo, hi, n, periodic)
        return cls((lo, hi), _evaluate(f, axis.nodes), periodic)

    @classmethod
    def from_function_2d(cls, f, xs, ys, shape=(257, 257), periodic=(False, False)):
        if isinstance(periodic, bool):
            periodic = (periodic, periodic)
        ax = _Axis(xs[0], xs[1], shape[0], periodic[0])
        ay = _Axis(ys[0], ys[1], shape[1], periodic[1])
        X, Y = np.meshgrid(ax.nodes, ay.nodes, indexing="ij")
        vals = np.asarray(f(X, Y), dtype=float) * np.ones_like(X)
        return cls((xs, ys), vals, periodic)

    @classmethod
    def uniform(cls, lo, hi, n: int = DEFAULT_NODES, periodic: bool = False):
        return cls((lo, hi), np.ones(n), periodic)

    @classmethod
    def uniform_2d(cls, xs, ys, shape=(2, 2), periodic=(False, False)):
        return cls((xs, ys), np.ones(shape), periodic)

    @classmethod
    def point_mass(cls, x: float = 0.0):
        return cls((x, x), [1.0])

    # -- basic properties -----------------------------------------------------
    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def support(self):
        return tuple((a.lo, a.hi) for a in self.axes)

    @property
    def periodic(self):
        return tuple(a.periodic for a in self.axes)

    @property
    def nodes(self):
        if self.ndim == 1:
            return self.axes[0].nodes
        return tuple(a.nodes for a in self.axes)

    def _trapezoid(self, values=None) -> float:
        v = self.values if values is None else values
        if v.ndim == 1:
            return float(self.axes[0].trap @ v)
        return float(self.axes[0].trap @ v @ self.axes[1].trap)

    def integral(self) -> float:
        return self._trapezoid()

    def __call__(self, *coords):
        """Evaluate the interpolant."""
        if self.ndim == 1:
            ax = self.axes[0]
            if ax.degenerate:
                return np.where(np.asarray(coords[0]) == ax.lo, np.inf, 0.0)
            j, tau, _ = ax.locate(coords[0])
            lam = tau / ax.h
            v = self.values
            out = (1 - lam) * v[ax.left[j]] + lam * v[ax.right[j]]
            if not ax.periodic:
                x = np.asarray(coords[0])
                out = np.where((x < ax.lo) | (x > ax.hi), 0.0, out)
            return out
        ax, ay = self.axes
        i, tx, _ = ax.locate(coords[0])
        j, ty, _ = ay.locate(coords[1])
        lx, ly = tx / ax.h, ty / ay.h
        v = self.values
        i0, i1, j0, j1 = ax.left[i], ax.right[i], ay.left[j], ay.right[j]
        return ((1 - lx) * (1 - ly) * v[i0, j0] + lx * (1 - ly) * v[i1, j0]
                + (1 - lx) * ly * v[i0, j1] + lx * ly * v[i1, j1])

    # -- integrals ------------------------------------------------------------
    def integrate_interval(self, u0: float, u1: float) -> float:
        if self.ndim != 1:
            raise DimensionError("integrate_interval needs a 1-D density")
        return float(self.axes[0].interval_weights(u0, u1) @ self.values)

    def integrate_box(self, x0, x1, y0, y1) -> float:
        if self.ndim != 2:
            raise DimensionError("integrate_box needs a 2-D density")
        wx = self.axes[0].interval_weights(x0, x1)
        wy = self.axes[1].interval_weights(y0, y1)
        return float(wx @ self.values @ wy)

    def marginal(self, axis: int) -> "DensityGrid":
        """Marginal density along ``axis`` (exact for the bilinear interpolant)."""
        if self.ndim != 2:
            raise DimensionError("marginal needs a 2-D density")
        other = self.axes[1 - axis]
        vals = self.values @ other.trap if axis == 0 else other.trap @ self.values
        ax = self.axes[axis]
        return DensityGrid((ax.lo, ax.hi), vals, ax.periodic)

    def cdf(self, x):
        if self.ndim != 1:
            raise DimensionError("cdf needs a 1-D density")
        ax = self.axes[0]
        if ax.degenerate:
            return np.where(np.asarray(x) >= ax.lo, 1.0, 0.0)
        return ax.antiderivative(self.values, np.atleast_1d(x))[0].reshape(np.shape(x))

    def moment(self, k: int) -> float:
        """Raw moment ``E[x**k]`` of a 1-D density (exact for ``k <= 14``)."""
        if self.ndim != 1:
            raise DimensionError("moment needs a 1-D density")
        ax = self.axes[0]
        if ax.degenerate:
            return ax.lo ** k
        gx, gw = np.polynomial.legendre.leggauss(8)
        t = 0.5 * (gx + 1.0)
        x0 = ax.lo + ax.h * ax.left
        xs = x0[:, None] + ax.h * t[None, :]
        fv = (1 - t)[None, :] * self.values[ax.left][:, None] + t[None, :] * self.values[ax.right][:, None]
        return float(np.sum(0.5 * ax.h * gw[None, :] * fv * xs ** k))

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        m = self.moment(1)
        return max(self.moment(2) - m * m, 0.0)

    # -- sampling -------------------------------------------------------------
    def sample(self, rng: RngStream, size: int) -> np.ndarray:
        """Inverse-CDF draws from the interpolant.

        1-D: one uniform per draw.  2-D: three uniforms per draw (x from the
        exact marginal, a column choice, then y from that column); returns an
        array of shape ``(size, 2)``.
        """
        size = int(size)
        if self.ndim == 1:
            ax = self.axes[0]
            if ax.degenerate:
                rng.random(size)
                return np.full(size, ax.lo)
            return _inverse_cdf(ax, self.values, rng.random(size))
        ax, ay = self.axes
        u = rng.random(3 * size).reshape(3, size)
        mx = self.values @ ay.trap
        x = _inverse_cdf(ax, mx, u[0])
        j, tau, _ = ax.locate(x)
        lam = tau / ax.h
        c0, c1 = ax.left[j], ax.right[j]
        w0 = (1 - lam) * mx[c0]
        w1 = lam * mx[c1]
        tot = w0 + w1
        with np.errstate(divide="ignore", invalid="ignore"):
            pick1 = np.where(tot > 0, u[1] * tot >= w0, False)
        col = np.where(pick1, c1, c0)
        rows = self.values / np.where(mx > 0, mx, 1.0)[:, None]
        cum = ay.cumulative(rows)
        offset = 2.0 * np.arange(rows.shape[0])[:, None]
        flat = (cum + offset).ravel()
        width = cum.shape[1]
        target = u[2] * cum[col, -1] + 2.0 * col
        pos = np.searchsorted(flat, target, side="right") - 1
        jj = np.clip(pos - col * width, 0, ay.ncells - 1)
        rem = target - flat[col * width + jj]
        y = ay.offset_in_cell(jj, rows[col, ay.left[jj]], rows[col, ay.right[jj]], rem)
        return np.column_stack([x, y])


def _inverse_cdf(ax: _Axis, values: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = ax.cumulative(values)
    m = u * cum[-1]
    j = np.clip(np.searchsorted(cum, m, side="right") - 1, 0, ax.ncells - 1)
    x = ax.offset_in_cell(j, values[ax.left[j]], values[ax.right[j]], m - cum[j])
    if ax.periodic:
        x = np.where(x >= ax.hi, ax.lo, x)
    return x


def _evaluate(f, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape != x.shape:
            y = y * np.ones_like(x)
    except (TypeError, ValueError):
        y = np.array([float(f(xi)) for xi in x])
    return y


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability weights, optionally attached to real support points."""

    weights: np.ndarray
    support: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise DimensionError("weights must be a nonempty 1-D array")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.support is not None:
            s = np.array(self.support, dtype=float)
            if s.shape != w.shape:
                raise DimensionError("support and weights differ in length")
            s.setflags(write=False)
            object.__setattr__(self, "support", s)

    @classmethod
    def normalized(cls, weights, support=None) -> "DiscreteDistribution":
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), support)

    @classmethod
    def uniform(cls, k: int) -> "DiscreteDistribution":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, k: int, j: int) -> "DiscreteDistribution":
        w = np.zeros(k)
        w[j] = 1.0
        return cls(w)

    def __len__(self) -> int:
        return self.weights.size

    def sample(self, rng: RngStream, size: int) -> np.ndarray:
        """Inverse-CDF draws of support points (or indices when no support)."""
        cum = np.cumsum(self.weights)
        idx = np.minimum(np.searchsorted(cum, rng.random(size) * cum[-1], side="right"), len(self) - 1)
        return idx if self.support is None else self.support[idx]


def quadrature(f: Callable, a: float, b: float, n: int = 64) -> float:
    """Composite Simpson rule with ``n`` subintervals (``n`` even)."""
    n = int(n)
    if n < 2 or n % 2:
        raise ValueError(f"Simpson rule needs an even node count >= 2, got {n}")
    x = np.linspace(a, b, n + 1)
    y = _evaluate(f, x)
    bad = np.flatnonzero(~np.isfinite(y))
    if bad.size:
        i = int(bad[0])
        raise EvaluationError(f"integrand is not finite at node {i} (x={x[i]!r}): {y[i]!r}")
    h = (b - a) / n
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def _weights(p) -> np.ndarray:
    return p.weights if isinstance(p, DiscreteDistribution) else np.asarray(p, dtype=float)


def tv_distance(p, q) -> float:
    """Total variation distance ``0.5 * sum |p_i - q_i|``."""
    pw, qw = _weights(p), _weights(q)
    if pw.shape != qw.shape:
        raise DimensionError(f"distributions differ in length: {pw.size} vs {qw.size}")
    return float(0.5 * np.abs(pw - qw).sum())


def ks_statistic(samples, cdf: Callable) -> float:
    """Two-sided Kolmogorov-Smirnov distance between samples and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic needs at least one sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def fourier_coefficient(psi: DensityGrid, n: int) -> tuple[float, float]:
    """Trapezoid values of the integrals of psi(u) cos(nu) and psi(u) sin(nu)."""
    if psi.ndim != 1 or not psi.axes[0].periodic:
        raise ValueError("fourier_coefficient needs a periodic 1-D density")
    if int(n) < 1:
        raise ValueError(f"harmonic must be a positive integer, got {n}")
    ax = psi.axes[0]
    u = ax.nodes
    w = ax.h * psi.values
    return float(w @ np.cos(n * u)), float(w @ np.sin(n * u))


def fourier_magnitude(psi: DensityGrid, n: int) -> float:
    c, s = fourier_coefficient(psi, n)
    return float(np.hypot(c, s))


def as_distribution(values: Sequence[float]) -> DiscreteDistribution:
    return DiscreteDistribution.normalized(values)
