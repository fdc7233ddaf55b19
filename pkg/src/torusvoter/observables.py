"""Set-valued observables, fluid-limit curves, and sup-deviation statistics."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .spin import Configuration


@dataclass
class ObservableSeries:
    """Piecewise-constant series: value values[i] on [times[i], times[i+1])."""

    times: list[float]
    values: list[float]
    horizon: float

    def value_at(self, t: float) -> float:
        if t < 0 or t > self.horizon:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        i = bisect.bisect_right(self.times, t) - 1
        return self.values[i]

    def sample(self, grid) -> np.ndarray:
        return np.array([self.value_at(t) for t in grid])


@dataclass
class SetClassification:
    """Membership masks for A (ones), B (zeros), C (>= d one-nbrs), D (<= d)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def sizes(self):
        return {k: int(getattr(self, k).sum()) for k in "ABCD"}


def classify(cfg: Configuration) -> SetClassification:
    d = cfg.shape.d
    ones = cfg.bits.astype(bool)
    return SetClassification(
        A=ones,
        B=~ones,
        C=cfg.ones_nbr >= d,
        D=cfg.ones_nbr <= d,
    )


@dataclass
class NeighborHistogram:
    """h[k] = #vertices with exactly k one-neighbors, k = 0..2d."""

    counts: np.ndarray

    def suffix(self, k: int) -> int:
        """|I(k)| = #vertices with >= k one-neighbors."""
        return int(self.counts[k:].sum())

    def prefix(self, k: int) -> int:
        """|J(k)| = #vertices with <= k one-neighbors."""
        return int(self.counts[: k + 1].sum())


def neighbor_histogram(cfg: Configuration) -> NeighborHistogram:
    counts = np.bincount(cfg.ones_nbr, minlength=2 * cfg.shape.d + 1)
    return NeighborHistogram(counts.astype(np.int64))


def fluid(p: float, t: float) -> float:
    """Limit curve of the ones-fraction: pe^{-t} below 1/2, 1-(1-p)e^{-t} above.

    The high-dimension convergence guarantee excludes p = 1/2; there the
    symmetry mean 1/2 is returned (see fluid_in_scope).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {p}")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if p < 0.5:
        return p * np.exp(-t)
    if p > 0.5:
        return 1.0 - (1.0 - p) * np.exp(-t)
    return 0.5


def fluid_in_scope(p: float) -> bool:
    """Whether the convergence guarantee covers this density (not p = 1/2)."""
    return p != 0.5


def sup_deviation(series: ObservableSeries, p: float, T: float) -> float:
    """Exact sup over [0, T] of |fraction(t) - fluid(p, t)|.

    The fraction is constant on each inter-event interval and the fluid
    curve is monotone in t, so the sup on an interval is attained at one of
    its endpoints.  The series must already be normalized by r^d.
    """
    best = 0.0
    times = series.times
    values = series.values
    for i, v in enumerate(values):
        t0 = times[i]
        if t0 > T:
            break
        t1 = min(times[i + 1], T) if i + 1 < len(times) else T
        dev = max(abs(v - fluid(p, t0)), abs(v - fluid(p, t1)))
        if dev > best:
            best = dev
    return best


class FractionObserver:
    """Records the ones-fraction series of a trajectory (feed to spin.run)."""

    def __init__(self):
        self.times: list[float] = []
        self.values: list[float] = []
        self._count = None
        self._horizon = 0.0

    def __call__(self, time, engine, event):
        n = engine.cfg.shape.n
        if event is None and not self.times:
            self._count = engine.cfg.ones_count()
            self.times.append(0.0)
            self.values.append(self._count / n)
            return
        if event is not None:
            self._count += 1 if event.new_value == 1 else -1
            self.times.append(time)
            self.values.append(self._count / n)
        self._horizon = max(self._horizon, time)

    def series(self) -> ObservableSeries:
        return ObservableSeries(list(self.times), list(self.values), self._horizon)


class EAccumulator:
    """Tracks E_t = union over s <= t of C_s, updated incrementally.

    A vertex joins E the first instant its ones-neighbor count reaches d
    (including t = 0).  A flip at x only changes the counts of x's
    neighbors, so only those are rechecked per event.
    """

    def __init__(self):
        self.in_E = None
        self.times: list[float] = []
        self.sizes: list[int] = []
        self._size = 0
        self._horizon = 0.0

    def __call__(self, time, engine, event):
        cfg = engine.cfg
        d = cfg.shape.d
        if self.in_E is None:
            self.in_E = cfg.ones_nbr >= d
            self._size = int(self.in_E.sum())
            self.times.append(0.0)
            self.sizes.append(self._size)
            return
        if event is not None:
            grew = False
            for y in engine._nbrs(event.vertex):
                if not self.in_E[y] and cfg.ones_nbr[y] >= d:
                    self.in_E[y] = True
                    self._size += 1
                    grew = True
            if grew:
                self.times.append(time)
                self.sizes.append(self._size)
        self._horizon = max(self._horizon, time)

    def series(self) -> ObservableSeries:
        return ObservableSeries(list(self.times), [float(s) for s in self.sizes],
                                self._horizon)

    @property
    def size(self) -> int:
        return self._size
