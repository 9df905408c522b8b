"""Event-driven simulation of three point masses A < B < C on a segment [0, L].

A is pushed toward B by a constant force F while it sits in the zone
``x_A < H``; C moves freely.  A reflects at 0, C reflects at L, and
neighbouring points collide elastically.  Between events every motion is a
polynomial of degree at most two, so flights are integrated in closed form
and event times are roots of quadratics.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .errors import ConfigError, NumericError
from .rng import RngStream

# event codes, in tie-breaking order
START, AB, BC, WALL_K, WALL_L, ZONE, END = range(7)
EVENT_NAMES = ("start", "A-B", "B-C", "wall-K", "wall-L", "zone", "end")


class DegenerateTrajectoryError(NumericError):
    pass


@dataclass(frozen=True)
class KelvinSystem:
    L: float = 1.0
    H: float = 0.25
    F: float = 1.0
    masses: tuple = (1.0, 1000.0, 1.0)
    x: tuple = (0.2, 0.5, 0.8)
    v: tuple = (1.0, 0.0, -0.7)

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "x", tuple(float(p) for p in self.x))
        object.__setattr__(self, "v", tuple(float(u) for u in self.v))
        mA, mB, mC = self.masses
        if not self.L > 0:
            raise ConfigError("L must be > 0")
        if not 0 <= self.H < self.L:
            raise ConfigError("H must lie in [0, L)")
        if not (math.isfinite(self.F) and self.F >= 0):
            raise ConfigError("F must be >= 0")
        for name, m in zip(("m_A", "m_C"), (mA, mC)):
            if not (math.isfinite(m) and m > 0):
                raise ConfigError(f"{name} must be > 0 and finite")
        if not mB > 0:
            raise ConfigError("m_B must be > 0")
        xA, xB, xC = self.x
        if not 0 <= xA < xB < xC <= self.L:
            raise ConfigError("need 0 <= x_A < x_B < x_C <= L")
        if not all(math.isfinite(u) for u in self.v):
            raise ConfigError("velocities must be finite")
        if math.isinf(mB) and self.v[1] != 0:
            raise ConfigError("an infinitely heavy B must be at rest")

    def energy(self, x=None, v=None) -> float:
        x = self.x if x is None else x
        v = self.v if v is None else v
        return float(_energy(np.asarray(x, float), np.asarray(v, float), np.asarray(self.masses), self.F, self.H))

    def with_state(self, x, v) -> "KelvinSystem":
        return replace(self, x=tuple(x), v=tuple(v))

    def jittered(self, rng: RngStream, scale: float = 1e-3) -> "KelvinSystem":
        """Positions and velocities perturbed by up to ``scale`` (positions in units of L)."""
        dx, dv = rng.uniform(-scale, scale, size=3), rng.uniform(-scale, scale, size=3)
        x = np.clip(np.asarray(self.x) + dx * self.L, 0.0, self.L)
        x = np.sort(x)
        v = np.asarray(self.v) + dv
        if math.isinf(self.masses[1]):
            v[1] = 0.0
        return self.with_state(x, v)


def random_system(rng: RngStream, mB: float = 1000.0) -> KelvinSystem:
    """A default-shaped system with random zone, force and ordered initial state."""
    u = rng.random(8)
    H = 0.1 + 0.3 * u[0]
    xs = np.sort(0.05 + 0.9 * u[1:4])
    v = np.array([2 * u[4] - 1, 0.05 * (2 * u[5] - 1), 2 * u[6] - 1])
    return KelvinSystem(1.0, H, 0.5 + 2 * u[7], (1.0, mB, 1.0), tuple(xs), tuple(v))


# -- kernel -------------------------------------------------------------------

@numba.njit(cache=True)
def _energy(x, v, m, F, H):
    e = 0.0
    for i in range(3):
        if v[i] != 0.0:
            e += 0.5 * m[i] * v[i] * v[i]
    if x[0] < H:
        e += F * (H - x[0])
    return e


@numba.njit(cache=True)
def _first_contact(g0, g1, g2):
    """Smallest t > 0 at which the gap g0 + g1 t + g2 t^2 closes (``inf`` if never).

    A gap already closed and still closing gives 0; a gap touching with zero
    relative velocity is a graze and is skipped.
    """
    if g0 <= 0.0:
        if g1 < 0.0:
            return 0.0
        g0 = 0.0
    if g2 == 0.0:
        if g1 < 0.0 and g0 > 0.0:
            return -g0 / g1
        return np.inf
    disc = g1 * g1 - 4.0 * g2 * g0
    if disc < 0.0:
        return np.inf
    q = -0.5 * (g1 + math.copysign(math.sqrt(disc), g1))
    best = np.inf
    if q != 0.0:
        r = q / g2
        if r > 0.0 and r < best:
            best = r
        r = g0 / q
        if r > 0.0 and r < best:
            best = r
    return best


@numba.njit(cache=True)
def _in_zone(xA, vA, H):
    return xA < H or (xA == H and vA < 0.0)


@numba.njit(cache=True)
def _collide(v1, v2, m1, m2):
    if math.isinf(m1):
        return v1, 2.0 * v1 - v2
    r = m1 / m2  # 0 for an infinitely heavy partner
    return ((r - 1.0) * v1 + 2.0 * v2) / (1.0 + r), (2.0 * r * v1 + (1.0 - r) * v2) / (1.0 + r)


@numba.njit(cache=True)
def _vsq_integral(v, a, s):
    return v * v * s + v * a * s * s + a * a * s * s * s / 3.0


@numba.njit(cache=True)
def _kernel(x, v, m, F, H, L, t, T, max_events, E0,
            log_t, log_x, log_v, log_k, record, cps, cp_out, cp_next, acc):
    """Advance in place until time ``T``, ``max_events`` events, or a full log.

    Returns ``(t, events, rows, status, max_drift, cp_next)`` with status
    0 = reached T, 1 = event cap, 2 = log full, 3 = no further events, 4 = order broken.
    """
    aA_zone = F / m[0]
    tol = 1e-9 * L
    cap = log_t.shape[0]
    rows = 0
    events = 0
    drift = 0.0
    while True:
        if events >= max_events:
            return t, events, rows, 1, drift, cp_next
        if record and rows >= cap:
            return t, events, rows, 2, drift, cp_next
        zone = _in_zone(x[0], v[0], H)
        aA = aA_zone if zone else 0.0
        # candidate times in tie order
        best = np.inf
        kind = -1
        c = _first_contact(x[1] - x[0], v[1] - v[0], -0.5 * aA)
        if c < best:
            best, kind = c, AB
        c = _first_contact(x[2] - x[1], v[2] - v[1], 0.0)
        if c < best:
            best, kind = c, BC
        c = _first_contact(x[0], v[0], 0.5 * aA)
        if c < best:
            best, kind = c, WALL_K
        c = _first_contact(L - x[2], -v[2], 0.0)
        if c < best:
            best, kind = c, WALL_L
        if H > 0.0:
            if zone:
                c = _first_contact(H - x[0], -v[0], -0.5 * aA)
            else:
                c = _first_contact(x[0] - H, v[0], 0.0)
            if c < best:
                best, kind = c, ZONE
        dt = best
        stop = False
        if t + dt >= T:
            dt = T - t
            stop = True
        if not math.isfinite(dt):
            return t, events, rows, 3, drift, cp_next
        # checkpoints inside this flight
        while cp_next < cps.shape[0] and cps[cp_next] <= t + dt:
            s = cps[cp_next] - t
            cp_out[cp_next, 0] = acc[0] + _vsq_integral(v[0], aA, s)
            cp_out[cp_next, 1] = acc[1] + v[2] * v[2] * s
            cp_out[cp_next, 2] = acc[2] + v[1] * v[1] * s
            cp_next += 1
        acc[0] += _vsq_integral(v[0], aA, dt)
        acc[1] += v[2] * v[2] * dt
        acc[2] += v[1] * v[1] * dt
        x[0] += dt * (v[0] + 0.5 * aA * dt)
        v[0] += aA * dt
        x[1] += v[1] * dt
        x[2] += v[2] * dt
        if stop:
            t = T
            return t, events, rows, 0, drift, cp_next
        t += dt
        if kind == AB:
            x[0] = x[1]
            v[0], v[1] = _collide(v[0], v[1], m[0], m[1])
        elif kind == BC:
            x[2] = x[1]
            v[1], v[2] = _collide(v[1], v[2], m[1], m[2])
        elif kind == WALL_K:
            x[0] = 0.0
            v[0] = -v[0]
        elif kind == WALL_L:
            x[2] = L
            v[2] = -v[2]
        else:
            x[0] = H
        events += 1
        # roundoff overlaps are resolved by a zero-time event; anything larger is a bug
        if x[0] - x[1] > tol or x[1] - x[2] > tol:
            return t, events, rows, 4, drift, cp_next
        e = _energy(x, v, m, F, H)
        d = abs(e - E0)
        if d > drift:
            drift = d
        if record:
            log_t[rows] = t
            log_k[rows] = kind
            for i in range(3):
                log_x[rows, i] = x[i]
                log_v[rows, i] = v[i]
            rows += 1


# -- driver -------------------------------------------------------------------

@dataclass
class KelvinRun:
    """Outcome of one simulation: final state, running integrals and (optionally) the event log."""

    system: KelvinSystem
    t: float
    events: int
    x: np.ndarray
    v: np.ndarray
    energy0: float
    max_energy_error: float
    vsq_time: np.ndarray  # time integrals of v_A^2, v_C^2, v_B^2
    checkpoints: np.ndarray = field(default_factory=lambda: np.empty(0))
    vsq_at_checkpoints: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    log: "EventLog | None" = None

    @property
    def relative_energy_drift(self) -> float:
        return self.max_energy_error / abs(self.energy0) if self.energy0 else self.max_energy_error

    @property
    def final_system(self) -> KelvinSystem:
        return self.system.with_state(self.x, self.v)


@dataclass
class EventLog:
    system: KelvinSystem
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    kind: np.ndarray

    def __len__(self) -> int:
        return self.t.size

    def energies(self) -> np.ndarray:
        m = np.asarray(self.system.masses)
        m = np.where(np.isfinite(m), m, 0.0)  # an infinitely heavy B is at rest and carries no energy
        kin = 0.5 * (m * self.v**2).sum(axis=1)
        xA, H = self.x[:, 0], self.system.H
        return kin + np.where(xA < H, self.system.F * (H - xA), 0.0)

    def state_at(self, times) -> tuple[np.ndarray, np.ndarray]:
        """Positions and velocities at arbitrary times inside the logged window."""
        times = np.atleast_1d(np.asarray(times, float))
        if times.min() < self.t[0] or times.max() > self.t[-1]:
            raise ValueError("times outside the logged window")
        i = np.clip(np.searchsorted(self.t, times, side="right") - 1, 0, self.t.size - 1)
        s = times - self.t[i]
        x, v = self.x[i].copy(), self.v[i].copy()
        zone = (x[:, 0] < self.system.H) | ((x[:, 0] == self.system.H) & (v[:, 0] < 0))
        aA = np.where(zone, self.system.F / self.system.masses[0], 0.0)
        x[:, 0] += s * (v[:, 0] + 0.5 * aA * s)
        v[:, 0] += aA * s
        x[:, 1:] += v[:, 1:] * s[:, None]
        return x, v

    def to_csv(self, path) -> None:
        tmp = f"{path}.tmp"
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x_A", "x_B", "x_C", "v_A", "v_B", "v_C", "event"])
            for t, x, v, k in zip(self.t, self.x, self.v, self.kind):
                w.writerow([repr(float(t)), *map(repr, map(float, x)), *map(repr, map(float, v)), EVENT_NAMES[k]])
        os.replace(tmp, path)


_CHUNK = 1 << 16


def simulate(system: KelvinSystem, T: float, rng: RngStream | None = None, *, jitter: float = 1e-3,
             record: bool = True, max_events: int | None = None, checkpoints=()) -> KelvinRun:
    """Evolve ``system`` for time ``T`` (or until ``max_events`` events).

    ``rng`` only perturbs the initial condition (by ``jitter``); the dynamics
    are deterministic.  With ``record`` the post-event states are logged,
    bracketed by ``start`` and ``end`` rows.  ``checkpoints`` are times at which
    the running integrals of the squared speeds are captured.
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    if max_events is None and not math.isfinite(T):
        raise ValueError("an infinite horizon needs max_events")
    if rng is not None and jitter > 0:
        system = system.jittered(rng, jitter)
    cap_events = np.iinfo(np.int64).max if max_events is None else int(max_events)
    x = np.array(system.x)
    v = np.array(system.v)
    m = np.array(system.masses)
    E0 = system.energy()
    cps = np.sort(np.asarray(checkpoints, float))
    if cps.size and (cps[0] <= 0 or cps[-1] > T):
        raise ValueError("checkpoints must lie in (0, T]")
    cp_out = np.zeros((cps.size, 3))
    acc = np.zeros(3)
    chunks_t, chunks_x, chunks_v, chunks_k = [np.zeros(1)], [x[None].copy()], [v[None].copy()], [np.array([START])]
    size = _CHUNK if record else 1
    t, events, drift, cp_next = 0.0, 0, 0.0, 0
    while True:
        lt, lx, lv, lk = np.empty(size), np.empty((size, 3)), np.empty((size, 3)), np.empty(size, np.int64)
        t, n, rows, status, d, cp_next = _kernel(x, v, m, system.F, system.H, system.L, t, float(T),
                                                 cap_events - events, E0, lt, lx, lv, lk, record,
                                                 cps, cp_out, cp_next, acc)
        events += n
        drift = max(drift, d)
        if record and rows:
            chunks_t.append(lt[:rows]); chunks_x.append(lx[:rows]); chunks_v.append(lv[:rows]); chunks_k.append(lk[:rows])
        if status == 4:
            raise NumericError(f"ordering A < B < C broken at t={t}")
        if status == 3:
            # nothing ever happens again: coast to the horizon
            if not math.isfinite(T):
                break
            rates = np.array([v[0] ** 2, v[2] ** 2, v[1] ** 2])
            cp_out[cp_next:] = acc + rates * (cps[cp_next:, None] - t)
            acc += rates * (T - t)
            x += v * (T - t)
            t = float(T)
            break
        if status in (0, 1):
            break
    log = None
    if record:
        chunks_t.append(np.array([t])); chunks_x.append(x[None].copy()); chunks_v.append(v[None].copy())
        chunks_k.append(np.array([END]))
        log = EventLog(system, np.concatenate(chunks_t), np.concatenate(chunks_x),
                       np.concatenate(chunks_v), np.concatenate(chunks_k).astype(np.int64))
    return KelvinRun(system, t, events, x, v, E0, drift, acc, cps, cp_out, log)


# -- occupancy ----------------------------------------------------------------

@dataclass(frozen=True)
class OccupancyMeasure:
    """Sojourn time per cell of a (v_A, v_C, x_A) grid, plus exact squared-speed integrals."""

    weights: np.ndarray
    edges: tuple
    vsq_time: np.ndarray  # integrals of v_A^2 and v_C^2 over time

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def density(self) -> np.ndarray:
        """Sojourn time per unit phase volume."""
        vol = np.multiply.outer(np.multiply.outer(np.diff(self.edges[0]), np.diff(self.edges[1])), np.diff(self.edges[2]))
        return self.weights / vol


@numba.njit(cache=True)
def _cell(value, edges):
    n = edges.shape[0] - 1
    j = int(math.floor((value - edges[0]) / (edges[n] - edges[0]) * n))
    return min(max(j, 0), n - 1)


@numba.njit(cache=True)
def _occupancy_kernel(t, x, v, F, mA, H, ev, ec, ex, W, vsq):
    stops = np.empty(2 * ex.shape[0] + ev.shape[0] + 2)
    for i in range(t.shape[0] - 1):
        dt = t[i + 1] - t[i]
        if dt <= 0.0:
            continue
        x0, u0, uc = x[i, 0], v[i, 0], v[i, 2]
        a = F / mA if _in_zone(x0, u0, H) else 0.0
        vsq[0] += _vsq_integral(u0, a, dt)
        vsq[1] += uc * uc * dt
        jc = _cell(uc, ec)
        n = 0
        stops[n] = 0.0
        n += 1
        if a != 0.0:
            for e in ev:
                s = (e - u0) / a
                if 0.0 < s < dt:
                    stops[n] = s
                    n += 1
        for e in ex:
            # x0 + u0 s + a/2 s^2 = e
            g0, g1, g2 = x0 - e, u0, 0.5 * a
            if g2 == 0.0:
                if g1 != 0.0:
                    s = -g0 / g1
                    if 0.0 < s < dt:
                        stops[n] = s
                        n += 1
            else:
                disc = g1 * g1 - 4.0 * g2 * g0
                if disc >= 0.0:
                    q = -0.5 * (g1 + math.copysign(math.sqrt(disc), g1))
                    if q != 0.0:
                        for s in (q / g2, g0 / q):
                            if 0.0 < s < dt:
                                stops[n] = s
                                n += 1
        stops[n] = dt
        n += 1
        ss = np.sort(stops[:n])
        for k in range(n - 1):
            d = ss[k + 1] - ss[k]
            if d <= 0.0:
                continue
            s = 0.5 * (ss[k] + ss[k + 1])
            W[_cell(u0 + a * s, ev), jc, _cell(x0 + u0 * s + 0.5 * a * s * s, ex)] += d


def occupancy(log: EventLog, dims=(32, 32, 32), vmax: float | None = None) -> OccupancyMeasure:
    """Exact sojourn time of the phase point (v_A, v_C, x_A) in each grid cell.

    Cell boundaries crossed during a flight are found as roots of the (at
    most quadratic) motion, so every sub-interval lies in a single cell.
    Speeds are gridded on ``[-vmax, vmax]`` (by default the largest speed
    energy allows a unit-mass point) and ``x_A`` on ``[0, L]``.
    """
    if log is None or len(log) < 2:
        raise ValueError("occupancy needs a nonempty event log")
    sysm = log.system
    if vmax is None:
        E = float(np.max(log.energies()))
        vmax = math.sqrt(2 * E / min(sysm.masses[0], sysm.masses[2])) * (1 + 1e-9)
        if vmax == 0:
            vmax = 1.0
    ev = np.linspace(-vmax, vmax, dims[0] + 1)
    ec = np.linspace(-vmax, vmax, dims[1] + 1)
    ex = np.linspace(0.0, sysm.L, dims[2] + 1)
    W = np.zeros(tuple(dims))
    vsq = np.zeros(2)
    _occupancy_kernel(log.t, log.x, log.v, sysm.F, sysm.masses[0], sysm.H, ev, ec, ex, W, vsq)
    return OccupancyMeasure(W, (ev, ec, ex), vsq)


def equipartition_moments(occ: OccupancyMeasure) -> tuple[float, float, float]:
    """Time-weighted means of v_A^2 and v_C^2 and their ratio."""
    total = occ.total
    if not total > 0:
        raise ValueError("occupancy has no weight")
    I_yz, I_xz = occ.vsq_time[0] / total, occ.vsq_time[1] / total
    if I_xz == 0:
        raise DegenerateTrajectoryError("C never moves: the ratio is undefined")
    return float(I_yz), float(I_xz), float(I_yz / I_xz)


# -- checks -------------------------------------------------------------------

def time_reversal_error(system: KelvinSystem, T: float) -> float:
    """Run for ``T``, negate all velocities, run ``T`` again; max deviation from the start."""
    fwd = simulate(system, T, record=False)
    back = simulate(system.with_state(fwd.x, -fwd.v), T, record=False)
    return float(max(np.max(np.abs(back.x - np.asarray(system.x))),
                     np.max(np.abs(-back.v - np.asarray(system.v)))))


@dataclass(frozen=True)
class LadderRow:
    T: float
    ratio: float
    deviation: float


def equipartition_ladder(system: KelvinSystem, times=(1e4, 1e5, 1e6), rng: RngStream | None = None,
                         jitter: float = 1e-3) -> list[LadderRow]:
    """Ratio of mean squared speeds of A and C over nested prefixes of one trajectory."""
    times = sorted(float(T) for T in times)
    run = simulate(system, times[-1], rng, jitter=jitter, record=False, checkpoints=times)
    rows = []
    for T, (iA, iC, _) in zip(times, run.vsq_at_checkpoints):
        if iC == 0:
            raise DegenerateTrajectoryError("C never moves: the ratio is undefined")
        r = iA / iC
        rows.append(LadderRow(T, float(r), float(abs(r - 1))))
    return rows
