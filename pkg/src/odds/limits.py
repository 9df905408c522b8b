"""Limit-theorem toolkit: Laplace-type ratios, error-law families, moments,
characteristic functions, the L2 law of large numbers, CLT distance, and
Gaussian marginals of the uniform law on the radius-sqrt(n) sphere."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special, stats

from .errors import NumericError, RangeError
from .numerics import DensityGrid, DiscreteDistribution, ks_statistic, quadrature
from .rng import RngStream

_GX, _GW = np.polynomial.legendre.leggauss(8)


# -- ratio of integrals -------------------------------------------------------

@dataclass(frozen=True)
class MaximumProfile:
    """Positive profile ``Phi`` on ``[lo, hi]`` with a unique maximum.

    ``log_phi`` is ``log Phi``; working with logs keeps ``Phi**p`` finite.
    ``z0`` is located on a grid of ``grid`` nodes and refined by golden
    section inside the bracketing cells.
    """

    log_phi: Callable
    lo: float
    hi: float
    grid: int = 20001
    z0: float = float("nan")

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("need hi > lo")
        z = np.linspace(self.lo, self.hi, self.grid)
        v = np.asarray(self.log_phi(z), dtype=float)
        if not np.all(np.isfinite(v)):
            raise NumericError("profile must be positive and finite on the grid")
        i = int(np.argmax(v))
        if np.count_nonzero(v == v[i]) > 1:
            raise NumericError("profile maximum is not unique on the grid")
        a, b = z[max(i - 1, 0)], z[min(i + 1, z.size - 1)]
        gr = (math.sqrt(5) - 1) / 2
        for _ in range(100):
            c, d = b - gr * (b - a), a + gr * (b - a)
            if self.log_phi(c) >= self.log_phi(d):
                b = d
            else:
                a = c
        object.__setattr__(self, "z0", 0.5 * (a + b))

    @classmethod
    def from_phi(cls, phi: Callable, lo: float, hi: float, **kw) -> "MaximumProfile":
        return cls(lambda z: np.log(phi(z)), lo, hi, **kw)


def laplace_ratio(phi1: Callable, phi2: Callable, profile: MaximumProfile, p: float,
                  nodes: Optional[int] = None) -> float:
    """``int phi1 Phi^p / int phi2 Phi^p`` by composite Simpson.

    ``Phi`` is divided by its maximum before exponentiation.  The default
    node count resolves the peak of width ``~ 1/sqrt(p)``.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    width = profile.hi - profile.lo
    if nodes is None:
        nodes = int(200 * math.sqrt(p) * width) + 2000
    nodes += nodes % 2
    z = np.linspace(profile.lo, profile.hi, nodes + 1)
    lp = np.asarray(profile.log_phi(z), dtype=float)
    peak = max(float(profile.log_phi(profile.z0)), float(lp.max()))
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.exp(p * (lp - peak))
    if not np.all(np.isfinite(w)) or not w.max() > 0:
        raise NumericError(f"profile power overflows or vanishes at exponent p={p}")
    simpson = np.ones(nodes + 1)
    simpson[1:-1:2] = 4
    simpson[2:-1:2] = 2
    num = float(np.sum(simpson * w * phi1(z)))
    den = float(np.sum(simpson * w * phi2(z)))
    if not den > 0 or not np.isfinite(num):
        raise NumericError(f"degenerate denominator at exponent p={p}")
    return num / den


# -- error-law family ---------------------------------------------------------

class ErrorLawFamily:
    """Densities ``theta(x) exp(A(z) x + B(z))`` indexed by the true value ``z``.

    ``B`` is fixed by ``B'(z) = -(1 + defect) A'(z) z`` and ``B(z_ref) = 0``;
    ``defect = 0`` is the family whose maximum-likelihood value is the mean.
    """

    def __init__(self, A: Callable, dA: Callable, theta: Callable | None = None,
                 z_ref: float = 0.0, defect: float = 0.0):
        self.A, self.dA = A, dA
        self.theta = theta if theta is not None else (lambda x: np.ones_like(np.asarray(x, float)))
        self.z_ref = float(z_ref)
        self.defect = float(defect)

    @classmethod
    def gaussian(cls, h: float = 1.0) -> "ErrorLawFamily":
        return cls(lambda z: h * np.asarray(z, float), lambda z: h + 0 * np.asarray(z, float))

    def broken(self, delta: float) -> "ErrorLawFamily":
        return ErrorLawFamily(self.A, self.dA, self.theta, self.z_ref, delta)

    def dB(self, z):
        z = np.asarray(z, dtype=float)
        return -(1 + self.defect) * self.dA(z) * z

    def B(self, z) -> np.ndarray:
        """``B`` on an increasing grid ``z`` by 8-point Gauss-Legendre per gap."""
        z = np.asarray(z, dtype=float)
        pts = np.sort(np.append(z, self.z_ref))
        a, b = pts[:-1], pts[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        q = mid[:, None] + half[:, None] * _GX[None, :]
        inc = half * (self.dB(q) @ _GW)
        cum = np.concatenate([[0.0], np.cumsum(inc)])
        ref = np.searchsorted(pts, self.z_ref)
        return np.interp(z, pts, cum - cum[ref])

    def invariant_residual(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(np.max(np.abs(self.dA(z) * z + self.dB(z))))

    def log_likelihood(self, data, z) -> np.ndarray:
        x = np.asarray(data, dtype=float)
        z = np.asarray(z, dtype=float)
        return self.A(z) * x.sum() + x.size * self.B(z) + float(np.sum(np.log(self.theta(x))))


@dataclass(frozen=True)
class PosteriorMode:
    mode: float
    mean: float
    gap: float
    spacing: float

    @property
    def consistent(self) -> bool:
        """Mode and mean agree to grid resolution."""
        return self.gap <= self.spacing * (1 + 1e-9)


def posterior_mode_check(family: ErrorLawFamily, data, z) -> PosteriorMode:
    """Maximum-likelihood (flat prior) value of ``z`` on the grid versus the sample mean."""
    x = np.asarray(data, dtype=float)
    if x.size == 0:
        raise ValueError("data must be nonempty")
    z = np.asarray(z, dtype=float)
    ll = family.log_likelihood(x, z)
    i = int(np.argmax(ll))
    if i == 0 or i == z.size - 1:
        raise RangeError(f"likelihood maximum at the grid boundary z={z[i]}")
    spacing = float(np.max(np.diff(z)))
    mean = float(x.mean())
    return PosteriorMode(float(z[i]), mean, abs(float(z[i]) - mean), spacing)


# -- method of moments --------------------------------------------------------

def gaussian_even_moment(p: int, h: float) -> float:
    """``E y^(2p)`` for the density ``sqrt(h/pi) exp(-h y^2)``."""
    return math.prod(range(1, 2 * p, 2)) / (2 * h) ** p


def euler_sum(terms) -> float:
    """Euler transform of an alternating series given its first terms."""
    a = np.abs(np.asarray(terms, dtype=float))
    total = 0.0
    for k in range(a.size):
        total += (-1) ** k * a[0] / 2 ** (k + 1)
        a = np.diff(a)
    return float(total)


@dataclass(frozen=True)
class MomentIdentity:
    lhs: float
    lhs_quadrature: float
    series: float
    raw_series: float
    residual: float
    raw_residual: float
    regime: str


def moment_identity_check(h: float, n: float, y0: float, P: int) -> MomentIdentity:
    """Both sides of ``E exp(-n (y0 - y)^2) = sum_p A_p E y^(2p)`` for Gaussian ``y``.

    ``lhs`` is the closed form, ``lhs_quadrature`` the direct integral.  The
    series (``y0 = 0`` only) has terms ``C(2p, p) (-n / 4h)^p``; it converges
    for ``n < h``, sits on the radius of convergence at ``n = h`` and diverges
    beyond.  ``raw_series`` is the plain partial sum through ``p = P``;
    ``series`` sums the same ``P + 1`` terms with the Euler transform, which
    also handles the boundary and divergent regimes.
    """
    if not h > 0 or n < 0:
        raise ValueError("need h > 0 and n >= 0")
    if P < 1:
        raise ValueError("P must be >= 1")
    lhs = math.sqrt(h / (h + n)) * math.exp(-h * n * y0 * y0 / (h + n))
    centre = n * y0 / (h + n)
    half = 40 / math.sqrt(2 * (h + n))
    f = lambda y: math.sqrt(h / math.pi) * np.exp(-h * y * y - n * (y0 - y) ** 2)
    lq = quadrature(f, centre - half, centre + half, 4000)
    if n == 0:
        regime = "convergent"
    else:
        regime = "convergent" if n < h else ("boundary" if n == h else "divergent")
    if y0 != 0:
        nan = float("nan")
        return MomentIdentity(lhs, lq, nan, nan, nan, nan, regime)
    x = -n / (4 * h)
    terms = [math.comb(2 * p, p) * x**p for p in range(P + 1)]
    raw = math.fsum(terms)
    series = euler_sum(terms) if n > 0 else raw
    return MomentIdentity(lhs, lq, series, raw, abs(lhs - series), abs(lhs - raw), regime)


# -- law of large numbers -----------------------------------------------------

@dataclass(frozen=True)
class LLNCheck:
    empirical: float
    theory: float
    bound: float

    @property
    def passed(self) -> bool:
        return abs(self.empirical - self.theory) <= self.bound


def _sample(dist, rng: RngStream, size: int) -> np.ndarray:
    if isinstance(dist, DensityGrid):
        return dist.sample(rng, size)
    if dist.support is None:
        raise ValueError("discrete distribution needs support points")
    return dist.sample(rng, size)


def _moments(dist) -> tuple[float, float, float]:
    if isinstance(dist, DensityGrid):
        return dist.moment(1), dist.moment(2), dist.moment(4)
    x = np.asarray(dist.support, dtype=float)
    w = dist.weights
    return float(w @ x), float(w @ x**2), float(w @ x**4)


def l2_lln_check(error_density, n: int, N: int, rng: RngStream, chunk: int = 1 << 21) -> LLNCheck:
    """Mean of ``(mean of n errors)^2`` over ``N`` replicates against ``E y^2 / n``.

    ``bound`` is five standard errors, with ``Var(ybar^2)`` from the exact
    fourth moment ``E ybar^4 = (n m4 + 3 n (n-1) m2^2) / n^4``.
    """
    if n < 1 or N < 1:
        raise ValueError("n and N must be >= 1")
    m1, m2, m4 = _moments(error_density)
    if abs(m1) > 1e-8 * math.sqrt(m2) + 1e-15:
        raise ValueError(f"error density must be centred (mean {m1})")
    theory = m2 / n
    e4 = (n * m4 + 3 * n * (n - 1) * m2 * m2) / n**4
    bound = 5 * math.sqrt(max(e4 - theory * theory, 0.0) / N)
    rows = max(1, chunk // n)
    acc = 0.0
    for s in range(0, N, rows):
        m = min(rows, N - s)
        y = _sample(error_density, rng, m * n).reshape(m, n)
        acc += float(np.sum(y.mean(axis=1) ** 2))
    return LLNCheck(acc / N, theory, bound)


# -- characteristic functions -------------------------------------------------

def characteristic_function(dist: DiscreteDistribution, alphas) -> np.ndarray:
    """``f(alpha) = sum_x p_x exp(alpha x)`` on a finite support."""
    if dist.support is None:
        raise ValueError("characteristic_function needs support points")
    x = np.asarray(dist.support, dtype=float)
    a = np.atleast_1d(np.asarray(alphas, dtype=float))
    e = np.outer(a, x)
    if np.any(e > 700):
        raise RangeError(f"exp overflow: alpha * x reaches {e.max():.4g}")
    return np.exp(e) @ dist.weights


def convolve(p: DiscreteDistribution, q: DiscreteDistribution) -> DiscreteDistribution:
    """Law of the sum of independent draws from ``p`` and ``q``."""
    s = np.add.outer(np.asarray(p.support, float), np.asarray(q.support, float)).ravel()
    w = np.outer(p.weights, q.weights).ravel()
    vals, inv = np.unique(s, return_inverse=True)
    return DiscreteDistribution.normalized(np.bincount(inv, weights=w), vals)


# -- central limit ------------------------------------------------------------

def clt_distance(error_density, n: int, N: int, rng: RngStream, chunk: int = 1 << 21) -> float:
    """KS distance between the standardized sum of ``n`` errors and N(0, 1)."""
    if n < 1 or N < 1:
        raise ValueError("n and N must be >= 1")
    m1, m2, _ = _moments(error_density)
    sd = math.sqrt(max(m2 - m1 * m1, 0.0))
    if sd == 0:
        raise ValueError("error law is degenerate")
    rows = max(1, chunk // n)
    z = np.empty(N)
    for s in range(0, N, rows):
        m = min(rows, N - s)
        y = _sample(error_density, rng, m * n).reshape(m, n)
        z[s:s + m] = (y.sum(axis=1) - n * m1) / (sd * math.sqrt(n))
    return ks_statistic(z, stats.norm.cdf)


# -- sphere lemma -------------------------------------------------------------

def sphere_marginal_cdf(x, n: int) -> np.ndarray:
    """CDF of one coordinate of a uniform point on the radius-sqrt(n) sphere in R^n.

    The squared coordinate over ``n`` is Beta(1/2, (n-1)/2).
    """
    x = np.asarray(x, dtype=float)
    r = np.clip(x * x / n, 0.0, 1.0)
    return 0.5 + 0.5 * np.sign(x) * special.betainc(0.5, (n - 1) / 2, r)


def sphere_samples(n: int, k: int, N: int, rng: RngStream, chunk_values: int = 1 << 21) -> np.ndarray:
    """First ``k`` coordinates of ``N`` uniform points on the radius-sqrt(n) sphere."""
    if n < 2 or not 1 <= k < n:
        raise ValueError("need n >= 2 and 1 <= k < n")
    out = np.empty((N, k))
    rows = max(1, chunk_values // n)
    for s in range(0, N, rows):
        m = min(rows, N - s)
        g = rng.normal((m, n))
        out[s:s + m] = math.sqrt(n) * g[:, :k] / np.linalg.norm(g, axis=1)[:, None]
    return out


def sphere_marginal_distance(n: int, k: int, N: int, rng: RngStream, against: str = "normal") -> float:
    """Largest KS distance over the first ``k`` coordinates, against N(0, 1)
    (``against="normal"``) or the exact marginal (``against="exact"``)."""
    if N < 1000:
        raise ValueError("N must be >= 1000")
    if against not in ("normal", "exact"):
        raise ValueError("against must be 'normal' or 'exact'")
    cdf = stats.norm.cdf if against == "normal" else (lambda x: sphere_marginal_cdf(x, n))
    pts = sphere_samples(n, k, N, rng)
    return max(ks_statistic(pts[:, i], cdf) for i in range(k))


def sphere_normal_gap(n: int) -> float:
    """Exact sup-distance between the sphere marginal CDF and the normal CDF."""
    if n == 3:
        # uniform on [-sqrt 3, sqrt 3]: largest gap where the densities cross
        x = math.sqrt(2 * math.log(2 * math.sqrt(3) / math.sqrt(2 * math.pi)))
        return float(stats.norm.cdf(x) - (0.5 + x / (2 * math.sqrt(3))))
    x = np.linspace(0, math.sqrt(n) if n < 50 else 12, 200001)
    return float(np.max(np.abs(sphere_marginal_cdf(x, n) - stats.norm.cdf(x))))
