"""Volume-preserving maps, region consequents and recurrence statistics.

Phase space is the unit interval or the unit torus, partitioned into ``G`` (or
``G x G``) cells with ``G`` a power of two.  Orbits are iterated in 64-bit
fixed point (a coordinate ``x`` is stored as the integer ``x * 2**64``), which
makes the rotation and cat map exact bijections of the point lattice.  The
baker map shifts one binary digit out of ``x`` every step; the digit shifted
in at the bottom is drawn fresh from the stream, i.e. the starting point's
digits below 2**-64 are revealed lazily instead of being silently zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .rng import RngStream

KINDS = ("rotation", "cat_map", "baker_map", "identity")
_ONE = 2.0**64
_TOP = np.uint64(1 << 63)


def _log2(G: int) -> int:
    if G < 1 or G & (G - 1):
        raise ValueError(f"grid resolution must be a power of two, got {G}")
    return G.bit_length() - 1


@dataclass(frozen=True)
class VolumePreservingMap:
    kind: str
    alpha: float = 0.0
    dimension: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "rotation" and self.dimension != 1:
            object.__setattr__(self, "dimension", 1)
        if self.kind in ("cat_map", "baker_map") and self.dimension != 2:
            object.__setattr__(self, "dimension", 2)
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")

    @classmethod
    def rotation(cls, alpha: float) -> "VolumePreservingMap":
        return cls("rotation", float(alpha), 1)

    @classmethod
    def cat_map(cls) -> "VolumePreservingMap":
        return cls("cat_map")

    @classmethod
    def baker_map(cls) -> "VolumePreservingMap":
        return cls("baker_map")

    @classmethod
    def identity(cls, dimension: int = 2) -> "VolumePreservingMap":
        return cls("identity", 0.0, dimension)

    @property
    def alpha_fixed(self) -> np.uint64:
        frac = self.alpha % 1.0
        return np.uint64(int(round(frac * _ONE)) % (1 << 64))

    def step(self, pts: np.ndarray, rng: Optional[RngStream] = None) -> np.ndarray:
        """One application to fixed-point points of shape ``(N, d)``."""
        if self.kind == "identity":
            return pts
        if self.kind == "rotation":
            with np.errstate(over="ignore"):
                return pts + self.alpha_fixed
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "cat_map":
            with np.errstate(over="ignore"):
                return np.column_stack([x + x + y, x + y])
        top = x & _TOP
        fresh = rng.u64(x.size) >> np.uint64(63) if rng is not None else np.zeros_like(x)
        nx = (x << np.uint64(1)) | fresh
        ny = (y >> np.uint64(1)) | top
        return np.column_stack([nx, ny])

    def __call__(self, points) -> np.ndarray:
        """Apply to float points in [0, 1)^d (convenience; not bit-exact for baker)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if p.shape[1] != self.dimension:
            p = p.T
        out = self.step(to_fixed(p)) if self.kind != "baker_map" else _baker_float(p)
        return from_fixed(out) if self.kind != "baker_map" else out


def _baker_float(p):
    x, y = p[:, 0], p[:, 1]
    left = x < 0.5
    return np.column_stack([np.where(left, 2 * x, 2 * x - 1), np.where(left, y / 2, (y + 1) / 2)])


def to_fixed(p: np.ndarray) -> np.ndarray:
    p = np.mod(np.asarray(p, dtype=float), 1.0)
    # split to keep all 53 mantissa bits through the conversion
    hi = np.floor(p * 2.0**32)
    lo = np.floor((p * 2.0**32 - hi) * 2.0**32)
    return (hi.astype(np.uint64) << np.uint64(32)) | lo.astype(np.uint64)


def from_fixed(p: np.ndarray) -> np.ndarray:
    return p.astype(np.float64) / _ONE


class Region:
    """A nonempty set of grid cells on the ``G`` or ``G x G`` partition.

    Cells are flat indices; in 2-D the cell ``(i, j)`` (``i`` along x) has
    index ``i * G + j``.
    """

    def __init__(self, cells, G: int, dim: int):
        _log2(G)
        cells = np.unique(np.asarray(cells, dtype=np.int64))
        if cells.size == 0:
            raise ValueError("a region must contain at least one cell")
        if cells[0] < 0 or cells[-1] >= G**dim:
            raise ValueError("cell index outside the grid")
        cells.setflags(write=False)
        self.cells, self.G, self.dim = cells, int(G), int(dim)

    @classmethod
    def interval(cls, lo: float, hi: float, G: int = 1024) -> "Region":
        """Cells meeting [lo, hi) (rounded outward)."""
        a, b = int(math.floor(lo * G)), int(math.ceil(hi * G))
        return cls(np.arange(a, b) % G, G, 1)

    @classmethod
    def rectangle(cls, x0: float, x1: float, y0: float, y1: float, G: int = 256) -> "Region":
        xi = np.arange(int(math.floor(x0 * G)), int(math.ceil(x1 * G))) % G
        yj = np.arange(int(math.floor(y0 * G)), int(math.ceil(y1 * G))) % G
        return cls((xi[:, None] * G + yj[None, :]).ravel(), G, 2)

    @property
    def volume(self) -> float:
        return self.cells.size / self.G**self.dim

    def __len__(self) -> int:
        return int(self.cells.size)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Region) and self.G == other.G and self.dim == other.dim
                and np.array_equal(self.cells, other.cells))

    def __hash__(self):
        return hash((self.G, self.dim, self.cells.tobytes()))

    def __repr__(self) -> str:
        return f"Region({len(self)} cells, G={self.G}, dim={self.dim}, volume={self.volume:.6g})"

    def mask(self) -> np.ndarray:
        m = np.zeros(self.G**self.dim, dtype=bool)
        m[self.cells] = True
        return m

    def cell_of(self, pts: np.ndarray) -> np.ndarray:
        """Flat cell index of fixed-point points."""
        shift = np.uint64(64 - _log2(self.G))
        idx = (pts >> shift).astype(np.int64)
        if self.dim == 1:
            return idx[:, 0]
        return idx[:, 0] * self.G + idx[:, 1]

    def sample(self, rng: RngStream, m: int) -> np.ndarray:
        """``m`` uniform fixed-point points in the region, shape ``(m, dim)``."""
        pick = self.cells[rng.integers(len(self), m)]
        bits = _log2(self.G)
        shift = np.uint64(64 - bits)
        if self.dim == 1:
            coords = [pick]
        else:
            coords = [pick // self.G, pick % self.G]
        out = []
        for c in coords:
            frac = rng.u64(m) >> np.uint64(bits) if bits else rng.u64(m)
            out.append((c.astype(np.uint64) << shift) | frac if bits else frac)
        return np.column_stack(out)


def consequents(fmap: VolumePreservingMap, r0: Region, n: int) -> list[Region]:
    """Images ``r_1, ..., r_n`` of ``r0`` under 1..n applications of ``fmap``.

    Cat map, identity, and rotations by a multiple of ``1/G`` act on cells by
    an exact permutation.  Other rotations and the baker map image the cells
    exactly (as intervals or dyadic rectangles) and round outward to cells.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if r0.dim != fmap.dimension:
        raise ValueError("region and map dimensions differ")
    G = r0.G
    if fmap.kind == "identity":
        return [r0] * n
    if fmap.kind == "cat_map":
        out, i, j = [], r0.cells // G, r0.cells % G
        for _ in range(n):
            i, j = (2 * i + j) % G, (i + j) % G
            out.append(Region(i * G + j, G, 2))
        return out
    if fmap.kind == "rotation":
        return [_rotate_cells(r0, fmap.alpha_fixed, s) for s in range(1, n + 1)]
    return _baker_consequents(r0, n)


def _rotate_cells(r0: Region, alpha: np.uint64, steps: int) -> Region:
    G, bits = r0.G, _log2(r0.G)
    shift = np.uint64(64 - bits)
    with np.errstate(over="ignore"):
        off = np.uint64((int(alpha) * steps) % (1 << 64))
        start = (r0.cells.astype(np.uint64) << shift) + off
    first = (start >> shift).astype(np.int64)
    partial = (start << np.uint64(bits)) != 0 if bits < 64 else np.zeros(first.size, bool)
    cells = np.concatenate([first, (first[partial] + 1) % G])
    return Region(cells, G, 1)


def _baker_consequents(r0: Region, n: int) -> list[Region]:
    G = r0.G
    i, j = r0.cells // G, r0.cells % G
    x0, x1 = i / G, (i + 1) / G
    y0, y1 = j / G, (j + 1) / G
    out = []
    for _ in range(n):
        straddle = (x0 < 0.5) & (x1 > 0.5)
        if straddle.any():
            x0 = np.concatenate([x0, np.full(straddle.sum(), 0.5)])
            x1 = np.concatenate([np.where(straddle, 0.5, x1), x1[straddle]])
            y0 = np.concatenate([y0, y0[straddle]])
            y1 = np.concatenate([y1, y1[straddle]])
        left = x1 <= 0.5
        x0, x1 = np.where(left, 2 * x0, 2 * x0 - 1), np.where(left, 2 * x1, 2 * x1 - 1)
        y0, y1 = np.where(left, y0 / 2, (y0 + 1) / 2), np.where(left, y1 / 2, (y1 + 1) / 2)
        cells = []
        for a0, a1, b0, b1 in zip(np.floor(x0 * G), np.ceil(x1 * G), np.floor(y0 * G), np.ceil(y1 * G)):
            xi = np.arange(int(a0), int(a1))
            yj = np.arange(int(b0), int(b1))
            cells.append((xi[:, None] * G + yj[None, :]).ravel())
        out.append(Region(np.concatenate(cells), G, 2))
    return out


@dataclass(frozen=True)
class OverlapWitness:
    cell: int
    regions: tuple[int, ...]


def overlap_lemma_check(regions: Sequence[Region], V: float, k: int) -> Optional[OverlapWitness]:
    """Find a cell lying in at least ``k + 1`` of the regions.

    When ``n v > k V`` such a cell must exist: if every point were covered at
    most ``k`` times, integrating the sum of the indicators over the container
    would give ``n v <= k V``.  Below that threshold a witness is returned
    when one exists and ``None`` otherwise.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if not regions:
        raise ValueError("need at least one region")
    G, dim = regions[0].G, regions[0].dim
    v = regions[0].volume
    for r in regions:
        if r.G != G or r.dim != dim:
            raise ValueError("regions live on different grids")
        if abs(r.volume - v) > 1e-12:
            raise ValueError(f"inconsistent volumes: {r.volume!r} vs {v!r}")
    counts = np.zeros(G**dim, dtype=np.int64)
    for r in regions:
        counts[r.cells] += 1
    union = np.count_nonzero(counts) / G**dim
    if union > V + 1e-12:
        raise ValueError(f"regions occupy volume {union!r}, more than the container volume {V!r}")
    best = int(np.argmax(counts))
    if counts[best] < k + 1:
        return None
    members = tuple(i for i, r in enumerate(regions) if np.any(r.cells == best))
    return OverlapWitness(best, members)


def non_return_bound(k: int, V: float, v: float, n: int) -> float:
    """Upper bound ``k V / (n v)`` on the probability that a point of a region
    of volume ``v`` visits it at most ``k`` times in ``n`` steps."""
    if v <= 0:
        raise ValueError("region volume must be positive")
    if n < 1 or k < 1:
        raise ValueError("k and n must be positive integers")
    return k * V / (n * v)


def return_counts(fmap: VolumePreservingMap, r0: Region, T: int, m: int, rng: RngStream) -> np.ndarray:
    """Number of returns to ``r0`` within steps 1..T for ``m`` uniform starts."""
    if r0.dim != fmap.dimension:
        raise ValueError("region and map dimensions differ")
    pts = r0.sample(rng, m)
    inside = r0.mask()
    counts = np.zeros(m, dtype=np.int64)
    bits = rng.child(1) if fmap.kind == "baker_map" else None
    for _ in range(T):
        pts = fmap.step(pts, bits)
        counts += inside[r0.cell_of(pts)]
    return counts


def recurrence_fraction(fmap: VolumePreservingMap, r0: Region, k: int, T: int, m: int,
                        rng: RngStream) -> float:
    """Fraction of ``m`` uniform starts in ``r0`` returning at least ``k`` times in ``T`` steps."""
    if not (T >= k >= 1) or m < 1:
        raise ValueError("need T >= k >= 1 and m >= 1")
    return float(np.mean(return_counts(fmap, r0, T, m, rng) >= k))


def volume_defect(fmap: VolumePreservingMap, G: int = 64, s: int = 8) -> float:
    """Largest per-cell deviation of the pushed-forward uniform lattice measure.

    ``s`` midpoints per cell and axis are mapped once; for a volume-preserving
    map every cell receives ``1 / G**d`` of the mass.
    """
    d = fmap.dimension
    g = (np.arange(G * s) + 0.5) / (G * s)
    if d == 1:
        pts = g[:, None]
    else:
        X, Y = np.meshgrid(g, g, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
    fixed = fmap.step(to_fixed(pts))
    cells = Region(np.arange(G**d), G, d).cell_of(fixed)
    mass = np.bincount(cells, minlength=G**d) / len(cells)
    return float(np.max(np.abs(mass - 1.0 / G**d)))
