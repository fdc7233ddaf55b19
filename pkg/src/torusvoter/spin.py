"""Configurations, flip rates, and the exact-in-law event-driven simulator.

Two dynamics share one engine, both with 0/1 flip rates:

* threshold dynamics: a vertex flips at rate 1 iff at least d of its 2d
  neighbors (counted with multiplicity) disagree with it;
* death dynamics: a 1 flips to 0 at rate 1 and freezes, 0s never flip.

The engine samples the next event from Exp(|active set|) and picks the
vertex uniformly over the active set, which is exactly the law of
independent unit-rate Poisson clocks with conditional flips (thinning).
A "naive" variant rings every vertex at rate 1 and rejects rate-0 rings;
it is slower but exposes every clock ring, which the survival-time
diagnostics need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .torus import TorusShape, neighbors

THRESHOLD = "threshold"
DEATH = "death"


@dataclass(frozen=True)
class RngStream:
    """Counter-based RNG identity: (seed, stream_id) -> reproducible stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


@dataclass
class Configuration:
    """Dense 0/1 state plus the maintained per-vertex ones-neighbor count."""

    shape: TorusShape
    bits: np.ndarray  # uint8, length r^d
    ones_nbr: np.ndarray  # int32, ones_nbr[x] = sum over neighbors (with mult.)

    def copy(self) -> "Configuration":
        return Configuration(self.shape, self.bits.copy(), self.ones_nbr.copy())

    def ones_count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class FlipEvent:
    time: float
    vertex: int
    new_value: int


@dataclass
class Trajectory:
    initial: Configuration
    events: list[FlipEvent]
    horizon: float


class CountMismatchError(Exception):
    """ones_nbr inconsistent with bits; carries the first offending vertex."""

    def __init__(self, vertex, expected, found):
        self.vertex = vertex
        super().__init__(f"ones_nbr[{vertex}] = {found}, rebuild gives {expected}")


def build_ones_nbr(shape: TorusShape, bits: np.ndarray) -> np.ndarray:
    """Neighbor-sum array via axis rolls (multiplicity 2 per dim when r=2)."""
    grid = bits.reshape((shape.r,) * shape.d).astype(np.int32)
    total = np.zeros_like(grid)
    for axis in range(shape.d):
        total += np.roll(grid, 1, axis=axis) + np.roll(grid, -1, axis=axis)
    return total.reshape(shape.n)


def config_from_bits(shape: TorusShape, bits) -> Configuration:
    bits = np.asarray(bits, dtype=np.uint8).reshape(shape.n)
    return Configuration(shape, bits.copy(), build_ones_nbr(shape, bits))


def sample_product(shape: TorusShape, p: float, rng: np.random.Generator) -> Configuration:
    """I.i.d. Bernoulli(p) configuration."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {p}")
    bits = (rng.random(shape.n) < p).astype(np.uint8)
    return Configuration(shape, bits, build_ones_nbr(shape, bits))


def threshold_rate(cfg: Configuration, x: int) -> int:
    """1 iff >= d neighbors (with multiplicity) disagree with x's value."""
    d = cfg.shape.d
    disagree = cfg.ones_nbr[x] if cfg.bits[x] == 0 else 2 * d - cfg.ones_nbr[x]
    return 1 if disagree >= d else 0


def death_rate(cfg: Configuration, x: int) -> int:
    """1 iff x is in state 1 (ones die at rate 1 and freeze)."""
    return int(cfg.bits[x])


def verify_counts(cfg: Configuration) -> None:
    """Rebuild ones_nbr from scratch; raise CountMismatchError on drift."""
    rebuilt = build_ones_nbr(cfg.shape, cfg.bits)
    bad = np.nonzero(rebuilt != cfg.ones_nbr)[0]
    if bad.size:
        v = int(bad[0])
        raise CountMismatchError(v, int(rebuilt[v]), int(cfg.ones_nbr[v]))


def _exp_variate(rng: np.random.Generator, rate: float) -> float:
    # inverse CDF for cross-platform reproducibility
    return -math.log1p(-rng.random()) / rate


class _IndexedSet:
    """Set of vertex ids with O(1) add/remove and uniform sampling."""

    def __init__(self, n: int):
        self.pos = [-1] * n
        self.items: list[int] = []

    def __len__(self):
        return len(self.items)

    def __contains__(self, x):
        return self.pos[x] >= 0

    def add(self, x):
        if self.pos[x] < 0:
            self.pos[x] = len(self.items)
            self.items.append(x)

    def remove(self, x):
        i = self.pos[x]
        if i >= 0:
            last = self.items[-1]
            self.items[i] = last
            self.pos[last] = i
            self.items.pop()
            self.pos[x] = -1


class EventEngine:
    """Gillespie loop over the active set for one of the two dynamics.

    naive=True switches to the rejection variant: total rate r^d, vertex
    uniform over all vertices, no-op when the rate there is 0.  With
    record_rings=True (naive only) the first ring time of every vertex is
    kept in first_ring.
    """

    def __init__(self, cfg: Configuration, kind: str, rng: np.random.Generator,
                 naive: bool = False, record_rings: bool = False):
        if kind not in (THRESHOLD, DEATH):
            raise ValueError(f"unknown dynamics kind {kind!r}")
        if record_rings and not naive:
            raise ValueError("ring recording requires the naive variant")
        self.cfg = cfg
        self.kind = kind
        self.rng = rng
        self.naive = naive
        self.time = 0.0
        shape = cfg.shape
        self._d = shape.d
        self._n = shape.n
        self._table = shape.neighbor_table()
        self._shape = shape
        self.first_ring = [math.inf] * shape.n if record_rings else None
        self.active = _IndexedSet(shape.n)
        for x in range(shape.n):
            if self._rate(x):
                self.active.add(x)

    def _nbrs(self, x):
        return self._table[x] if self._table is not None else neighbors(self._shape, x)

    def _rate(self, x) -> int:
        bits = self.cfg.bits
        if self.kind == DEATH:
            return int(bits[x])
        d = self._d
        disagree = self.cfg.ones_nbr[x] if bits[x] == 0 else 2 * d - self.cfg.ones_nbr[x]
        return 1 if disagree >= d else 0

    def _apply_flip(self, x) -> int:
        """Flip x, update neighbor counts and the active set; return new value."""
        cfg = self.cfg
        new = 1 - int(cfg.bits[x])
        cfg.bits[x] = new
        delta = 1 if new == 1 else -1
        nbrs = self._nbrs(x)
        ones_nbr = cfg.ones_nbr
        for y in nbrs:
            ones_nbr[y] += delta
        if not self.naive:
            touched = set(nbrs)
            touched.add(x)
            for y in touched:
                if self._rate(y):
                    self.active.add(y)
                else:
                    self.active.remove(y)
        return new

    def step(self, horizon: float) -> FlipEvent | None:
        """Advance to the next flip event, or to the horizon if none occurs."""
        rng = self.rng
        if self.naive:
            n = self._n
            while True:
                dt = _exp_variate(rng, n)
                if self.time + dt >= horizon:
                    self.time = horizon
                    return None
                self.time += dt
                x = int(rng.integers(n))
                if self.first_ring is not None and self.first_ring[x] == math.inf:
                    self.first_ring[x] = self.time
                if self._rate(x):
                    return FlipEvent(self.time, x, self._apply_flip(x))
        else:
            k = len(self.active)
            if k == 0:
                self.time = horizon
                return None
            dt = _exp_variate(rng, k)
            if self.time + dt >= horizon:
                self.time = horizon
                return None
            self.time += dt
            x = self.active.items[int(rng.integers(k))]
            return FlipEvent(self.time, x, self._apply_flip(x))


def run(cfg: Configuration, kind: str, T: float, rng: np.random.Generator,
        observers=(), naive: bool = False, record_rings: bool = False,
        engine_out: list | None = None) -> Trajectory:
    """Simulate the dynamics on [0, T], notifying observers at 0, events, T.

    Observers are callables observer(time, engine, event_or_None); they see
    the live post-flip state.  engine_out, if given, receives the engine
    (for ring times and final-state access).
    """
    if T <= 0:
        raise ValueError(f"horizon must be positive, got {T}")
    initial = cfg.copy()
    engine = EventEngine(cfg, kind, rng, naive=naive, record_rings=record_rings)
    if engine_out is not None:
        engine_out.append(engine)
    events: list[FlipEvent] = []
    for obs in observers:
        obs(0.0, engine, None)
    while engine.time < T:
        ev = engine.step(T)
        if ev is None:
            break
        events.append(ev)
        for obs in observers:
            obs(ev.time, engine, ev)
    for obs in observers:
        obs(T, engine, None)
    return Trajectory(initial, events, T)


def replay(traj: Trajectory):
    """Yield (time, cfg) after each event, starting from (0, initial copy)."""
    cfg = traj.initial.copy()
    yield 0.0, cfg
    table = cfg.shape.neighbor_table()
    for ev in traj.events:
        delta = 1 if ev.new_value == 1 else -1
        cfg.bits[ev.vertex] = ev.new_value
        nbrs = table[ev.vertex] if table is not None else neighbors(cfg.shape, ev.vertex)
        for y in nbrs:
            cfg.ones_nbr[y] += delta
        yield ev.time, cfg


def sample_death_counts(shape: TorusShape, p: float, times, replicas: int,
                        rng: np.random.Generator) -> np.ndarray:
    """|G_t| at each grid time for `replicas` independent death processes.

    Vectorized and exact in law: each initial 1 dies at an independent
    Exp(1) time, zeros are frozen.  Returns an int array of shape
    (replicas, len(times)).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {p}")
    times = np.asarray(times, dtype=float)
    out = np.empty((replicas, times.size), dtype=np.int64)
    for i in range(replicas):
        alive0 = rng.random(shape.n) < p
        deaths = -np.log1p(-rng.random(shape.n))
        for j, t in enumerate(times):
            out[i, j] = int(np.count_nonzero(alive0 & (deaths > t)))
    return out
