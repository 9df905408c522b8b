"""Card-shuffling Markov chains and the max/min envelope contraction."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DimensionError, RegularityError
from .numerics import DiscreteDistribution
from .rng import RngStream

MAX_CARDS = 5


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Doubly stochastic matrix; ``alpha[j, h]`` is the probability of moving
    from state ``h`` to state ``j``, so distributions evolve as ``p -> alpha @ p``."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DimensionError("kernel must be a nonempty square matrix")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ValueError("kernel entries must be finite and nonnegative")
        col = np.abs(a.sum(axis=0) - 1).max()
        row = np.abs(a.sum(axis=1) - 1).max()
        if col > 1e-12 or row > 1e-12:
            raise ValueError(f"kernel is not doubly stochastic (row error {row:.3g}, column error {col:.3g})")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def k(self) -> int:
        return self.alpha.shape[0]

    @property
    def eps(self) -> float:
        return float(self.alpha.min())

    def __matmul__(self, p):
        return self.alpha @ p


def two_card_expectation(p: float, n: int) -> float:
    """Mean of a product of ``n`` independent signs equal to +1 with probability ``p``."""
    if not 0 <= p <= 1 or n < 0:
        raise ValueError("need p in [0, 1] and n >= 0")
    return (2 * p - 1) ** n


def two_card_mc(p: float, n: int, N: int, rng: RngStream, chunk: int = 1 << 20) -> float:
    """Monte Carlo estimate of :func:`two_card_expectation` from ``N`` replicates."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if n == 0:
        return 1.0
    total = 0
    rows = max(1, chunk // n)
    for s in range(0, N, rows):
        m = min(rows, N - s)
        flips = np.count_nonzero(rng.random((m, n)) >= p, axis=1)
        total += m - 2 * int(np.count_nonzero(flips & 1))
    return total / N


def permutations(m: int) -> list[tuple[int, ...]]:
    """All permutations of ``range(m)`` in lexicographic order."""
    return list(itertools.permutations(range(m)))


def shuffle_kernel(m: int, shuffle_law) -> TransitionKernel:
    """Kernel of the walk ``pi -> sigma o pi`` with ``sigma`` drawn from ``shuffle_law``.

    States and the law are both indexed by the lexicographic list of
    permutations of ``m`` cards.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > MAX_CARDS:
        raise ValueError(f"at most {MAX_CARDS} cards ({math.factorial(MAX_CARDS)} states) are supported")
    law = np.asarray(getattr(shuffle_law, "weights", shuffle_law), dtype=float)
    perms = permutations(m)
    if law.size != len(perms):
        raise DimensionError(f"shuffle law needs {len(perms)} weights, got {law.size}")
    index = {p: i for i, p in enumerate(perms)}
    k = len(perms)
    alpha = np.zeros((k, k))
    for s, w in enumerate(law):
        if w == 0:
            continue
        sigma = perms[s]
        for h, pi in enumerate(perms):
            alpha[index[tuple(sigma[i] for i in pi)], h] += w
    return TransitionKernel(alpha)


def transposition_law(m: int, lazy: float = 0.5) -> DiscreteDistribution:
    """Identity with probability ``lazy``, otherwise a uniform random transposition."""
    perms = permutations(m)
    w = np.zeros(len(perms))
    w[0] = lazy
    swaps = [p for p in perms if sum(i != v for i, v in enumerate(p)) == 2]
    for p in swaps:
        w[perms.index(p)] += (1 - lazy) / len(swaps)
    return DiscreteDistribution(w)


@dataclass(frozen=True)
class EnvelopeTrace:
    n: tuple[int, ...]
    P: tuple[float, ...]
    p: tuple[float, ...]

    @property
    def spread(self) -> np.ndarray:
        return np.asarray(self.P) - np.asarray(self.p)

    def is_monotone(self, tol: float = 1e-12) -> bool:
        P, p = np.asarray(self.P), np.asarray(self.p)
        return bool(np.all(np.diff(P) <= tol) and np.all(np.diff(p) >= -tol) and np.all(P >= p - tol))


def iterate_distribution(kernels: Sequence[TransitionKernel], p0) -> tuple[DiscreteDistribution, EnvelopeTrace]:
    """Apply the kernels in order to ``p0`` and record the max/min envelope after each step."""
    p = np.asarray(getattr(p0, "weights", p0), dtype=float)
    P_hist, p_hist = [p.max()], [p.min()]
    for K in kernels:
        if K.k != p.size:
            raise DimensionError(f"kernel of size {K.k} applied to a distribution of length {p.size}")
        p = K.alpha @ p
        P_hist.append(p.max())
        p_hist.append(p.min())
    trace = EnvelopeTrace(tuple(range(len(P_hist))), tuple(map(float, P_hist)), tuple(map(float, p_hist)))
    return DiscreteDistribution.normalized(np.maximum(p, 0.0)), trace


@dataclass(frozen=True)
class CertificateRow:
    n: int
    spread: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.spread <= self.bound + 1e-12


@dataclass(frozen=True)
class ContractionCertificate:
    eps: float
    k: int
    rows: tuple[CertificateRow, ...]
    trace: EnvelopeTrace

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows) and self.trace.is_monotone()


def borel_contraction_certificate(kernels: Sequence[TransitionKernel], p0) -> ContractionCertificate:
    """Check ``spread_n <= (1 - k eps)^n spread_0`` along the chain.

    Writing each column as ``alpha[:, h] = eps + beta[:, h]`` with
    ``beta >= 0`` summing to ``1 - k eps`` gives
    ``p_{j,n+1} = eps + sum_h beta[j, h] p_{h,n}``, a combination of the
    ``p_{h,n}`` with total weight ``1 - k eps``, whence the one-step factor.
    """
    kernels = list(kernels)
    if not kernels:
        raise ValueError("need at least one kernel")
    k = kernels[0].k
    eps = min(K.eps for K in kernels)
    if eps <= 0:
        raise RegularityError("every kernel entry must be bounded below by some eps > 0")
    if k * eps > 1 + 1e-12:
        raise ValueError("k * eps exceeds 1")
    _, trace = iterate_distribution(kernels, p0)
    spread = trace.spread
    q = max(1.0 - k * eps, 0.0)
    rows = tuple(CertificateRow(n, float(spread[n]), float(q**n * spread[0])) for n in trace.n)
    return ContractionCertificate(eps, k, rows, trace)


def _primitive(alpha: np.ndarray) -> bool:
    """Some power of the support pattern is strictly positive (Wielandt bound)."""
    k = alpha.shape[0]
    B = (alpha > 0).astype(np.int64)
    target = (k - 1) ** 2 + 1
    R = np.eye(k, dtype=np.int64)
    e = target
    while e:
        if e & 1:
            R = np.minimum(R @ B, 1)
        B = np.minimum(B @ B, 1)
        e >>= 1
    return bool(R.all())


def mixing_time(kernel: TransitionKernel, tol: float, metric: str = "tv", cap: int = 10**6) -> int:
    """Smallest ``n`` such that every point-mass start is within ``tol`` of uniform.

    ``metric="tv"`` measures total variation; ``metric="spread"`` measures the
    envelope width ``P_n - p_n`` instead.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if metric not in ("tv", "spread"):
        raise ValueError("metric must be 'tv' or 'spread'")
    if not _primitive(kernel.alpha):
        raise ConvergenceError("kernel is reducible or periodic; the chain does not mix")
    k = kernel.k
    P = np.eye(k)

    def dist(P):
        if metric == "tv":
            return 0.5 * np.abs(P - 1.0 / k).sum(axis=0).max()
        return (P.max(axis=0) - P.min(axis=0)).max()

    for n in range(cap + 1):
        if dist(P) <= tol:
            return n
        P = kernel.alpha @ P
    raise ConvergenceError(f"no convergence to tolerance {tol} within {cap} steps")


def simulate_paths(kernel: TransitionKernel, p0, n: int, N: int, rng: RngStream) -> DiscreteDistribution:
    """Empirical state distribution of ``N`` independent paths after ``n`` steps."""
    w = np.asarray(getattr(p0, "weights", p0), dtype=float)
    if w.size != kernel.k:
        raise DimensionError("p0 and kernel sizes differ")
    state = np.minimum(np.searchsorted(np.cumsum(w), rng.random(N), side="right"), kernel.k - 1)
    C = np.cumsum(kernel.alpha, axis=0).T
    for _ in range(n):
        u = rng.random(N)
        state = np.minimum((u[:, None] >= C[state]).sum(axis=1), kernel.k - 1)
    return DiscreteDistribution(np.bincount(state, minlength=kernel.k) / N)


def random_kernel(k: int, rng: RngStream, terms: int = 4, floor: float = 0.3) -> TransitionKernel:
    """Random doubly stochastic kernel with every entry at least ``floor / k``.

    A convex combination of the flat kernel and random permutation matrices.
    """
    w = rng.random(terms) + 0.1
    w = (1 - floor) * w / w.sum()
    alpha = np.full((k, k), floor / k)
    for wi in w:
        perm = np.argsort(rng.random(k), kind="stable")
        alpha[perm, np.arange(k)] += wi
    # exact column and row sums up to rounding of the weights
    alpha /= alpha.sum(axis=0, keepdims=True)
    return TransitionKernel(alpha)
