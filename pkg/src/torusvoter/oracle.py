"""Exact and closed-form references the Monte Carlo engine is checked against.

Everything here is deterministic: binomial tails in log-space, the variance
of the initial |C_0| count by pair decomposition, the transient solution of
the full 2^n-state chain by uniformization, and the exact law of the death
process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.special import gammaln, logsumexp

from .torus import TorusShape, neighbors, two_hop_set

CTMC_MAX_VERTICES = 20


class CapacityError(Exception):
    """State space too large for the exact solver."""


def binom_logtail(n: int, p: float, k: int) -> float:
    """log P(Binomial(n, p) >= k), exact summation in log space."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not 0 <= k <= n + 1:
        raise ValueError(f"threshold {k} outside [0, {n + 1}]")
    if k <= 0:
        return 0.0
    if k == n + 1:
        return -math.inf
    if p == 0.0:
        return -math.inf
    if p == 1.0:
        return 0.0
    j = np.arange(k, n + 1)
    logpmf = (gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)
              + j * math.log(p) + (n - j) * math.log1p(-p))
    return float(logsumexp(logpmf))


def binom_tail(n: int, p: float, k: int) -> float:
    """P(Binomial(n, p) >= k)."""
    return math.exp(binom_logtail(n, p, k))


@dataclass(frozen=True)
class LdpConstants:
    """Cramer rate K = -log[4p(1-p)] and growth constant C = (log r - K)/2."""

    K: float
    C: float
    admissible: bool  # log r - K > 0, i.e. 4p(1-p) > 1/r


def ldp_constants(p: float, r: int) -> LdpConstants:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly in (0, 1), got {p}")
    K = -math.log(4.0 * p * (1.0 - p))
    C = (math.log(r) - K) / 2.0
    return LdpConstants(K=K, C=C, admissible=C > 0.0)


def vertex_tail(shape: TorusShape, p: float, k: int) -> float:
    """P(sum of one-neighbors of a fixed vertex >= k) under the product law.

    The sum counts multiplicity, so it is Binomial(2d, p) for r >= 3 but
    2 * Binomial(d, p) on the r=2 multigraph.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {p}")
    mults = tuple(sorted(_multiplicities(shape, 0).values()))
    return _weighted_bernoulli_tail(mults, p, k)


def neighbor_tail(d: int, r: int, p: float, k: int) -> float:
    """vertex_tail from (d, r) alone, for tori too large to index.

    The multiplicity profile is (2,)*d when r = 2 (both slots per dimension
    hit the same vertex) and (1,)*2d for r >= 3.
    """
    if d < 1 or r < 2:
        raise ValueError(f"need d >= 1 and r >= 2, got d={d}, r={r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {p}")
    mults = (2,) * d if r == 2 else (1,) * (2 * d)
    return _weighted_bernoulli_tail(mults, p, k)


def expected_suffix_count(shape: TorusShape, p: float, k: int) -> float:
    """E|I_0(k)| = r^d P(sum of one-neighbors of a vertex >= k)."""
    if not 0 <= k <= 2 * shape.d:
        raise ValueError(f"threshold {k} outside [0, {2 * shape.d}]")
    return shape.n * vertex_tail(shape, p, k)


def expected_C0(shape: TorusShape, p: float) -> float:
    """E|C_0| = E|I_0(d)|."""
    return expected_suffix_count(shape, p, shape.d)


@lru_cache(maxsize=None)
def _weighted_bernoulli_dist(mults: tuple[int, ...], p: float) -> tuple[float, ...]:
    """Distribution of sum m_i X_i with X_i iid Bernoulli(p)."""
    dist = [1.0]
    for m in mults:
        new = [0.0] * (len(dist) + m)
        for s, w in enumerate(dist):
            new[s] += w * (1.0 - p)
            new[s + m] += w * p
        dist = new
    return tuple(dist)


def _weighted_bernoulli_tail(mults: tuple[int, ...], p: float, t: int) -> float:
    """P(sum m_i X_i >= t)."""
    if t <= 0:
        return 1.0
    dist = _weighted_bernoulli_dist(tuple(sorted(mults)), p)
    if t >= len(dist):
        return 0.0
    return float(sum(dist[t:]))


def _multiplicities(shape: TorusShape, x: int) -> dict[int, int]:
    out: dict[int, int] = {}
    for y in neighbors(shape, x):
        out[y] = out.get(y, 0) + 1
    return out


def joint_tail_C0(shape: TorusShape, p: float, x1: int, x2: int) -> float:
    """P(both x1 and x2 have >= d one-neighbors under the product law).

    Conditions on the bits of the shared neighbor set exactly (2^|S| terms),
    then multiplies independent weighted-Bernoulli tails over the disjoint
    remainders.  Valid for every r, including the r=2 multigraph.
    """
    d = shape.d
    if x1 == x2:
        return vertex_tail(shape, p, d)
    m1 = _multiplicities(shape, x1)
    m2 = _multiplicities(shape, x2)
    shared = sorted(set(m1) & set(m2))
    r1 = tuple(m for v, m in m1.items() if v not in m2)
    r2 = tuple(m for v, m in m2.items() if v not in m1)
    total = 0.0
    for mask in range(1 << len(shared)):
        w, c1, c2 = 1.0, 0, 0
        for i, s in enumerate(shared):
            if mask >> i & 1:
                w *= p
                c1 += m1[s]
                c2 += m2[s]
            else:
                w *= 1.0 - p
        total += (w
                  * _weighted_bernoulli_tail(r1, p, d - c1)
                  * _weighted_bernoulli_tail(r2, p, d - c2))
    return total


def exact_var_C0(shape: TorusShape, p: float) -> float:
    """Var(|C_0|) under the product law, by pair decomposition.

    Pairs with no shared neighbor are independent and contribute nothing;
    the remaining displacement classes (at most 2d^2 per vertex) are summed
    with exact joint tails, using vertex transitivity.
    """
    q = vertex_tail(shape, p, shape.d)
    var = shape.n * q * (1.0 - q)
    for z in two_hop_set(shape, 0):
        var += shape.n * (joint_tail_C0(shape, p, 0, z) - q * q)
    return var


@dataclass(frozen=True)
class DeathLaw:
    """|G_t| ~ Binomial(n, p e^{-t}): sites survive independently."""

    n: int
    success: float
    mean: float
    variance: float


def death_law(shape: TorusShape, p: float, t: float) -> DeathLaw:
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {p}")
    q = p * math.exp(-t)
    return DeathLaw(shape.n, q, shape.n * q, shape.n * q * (1.0 - q))


def _state_tables(shape: TorusShape):
    """Per-state vertex bits, ones-neighbor counts, and flip activity."""
    n = shape.n
    size = 1 << n
    states = np.arange(size, dtype=np.uint32)
    bits = np.empty((n, size), dtype=np.int8)
    for x in range(n):
        bits[x] = (states >> x) & 1
    ones_nbr = np.zeros((n, size), dtype=np.int16)
    for x in range(n):
        for y in neighbors(shape, x):
            ones_nbr[x] += bits[y]
    d = shape.d
    disagree = np.where(bits == 0, ones_nbr, 2 * d - ones_nbr)
    return bits, disagree >= d


def _uniformized_kernel(shape: TorusShape, active: np.ndarray) -> sparse.csr_matrix:
    n = shape.n
    size = 1 << n
    rows, cols = [], []
    for x in range(n):
        src = np.nonzero(active[x])[0]
        rows.append(src)
        cols.append(src ^ (1 << x))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.full(rows.size, 1.0 / n)
    P = sparse.csr_matrix((data, (rows, cols)), shape=(size, size))
    diag = 1.0 - np.asarray(P.sum(axis=1)).ravel()
    return P + sparse.diags(diag)


def ctmc_mean_ones(shape: TorusShape, initial, t: float, tol: float = 1e-10) -> float:
    """Exact E|A_t| for the voter model by uniformization over all 2^n states.

    initial may be a Configuration (delta start) or a density p in [0, 1]
    (product-law start, handled by the product weights on states).
    """
    n = shape.n
    if n > CTMC_MAX_VERTICES:
        raise CapacityError(f"{n} vertices means 2^{n} states; limit is 2^{CTMC_MAX_VERTICES}")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    bits, active = _state_tables(shape)
    popcount = bits.sum(axis=0).astype(float)
    size = 1 << n
    if hasattr(initial, "bits"):
        state = int(sum(int(b) << x for x, b in enumerate(initial.bits)))
        v = np.zeros(size)
        v[state] = 1.0
    else:
        p = float(initial)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"density must lie in [0, 1], got {p}")
        k = popcount
        if p == 0.0:
            v = (k == 0).astype(float)
        elif p == 1.0:
            v = (k == n).astype(float)
        else:
            v = np.exp(k * math.log(p) + (n - k) * math.log1p(-p))
    P = _uniformized_kernel(shape, active)
    lam_t = n * t
    w = math.exp(-lam_t)
    cum = w
    total = w * float(v @ popcount)
    k = 0
    # n bounds |A_t|, so remaining Poisson mass * n bounds the truncation error
    while (1.0 - cum) * n > tol:
        k += 1
        v = v @ P
        w *= lam_t / k
        cum += w
        total += w * float(v @ popcount)
    return total


def ldp_convergence(p: float, d_max: int):
    """Exact -(1/d) log P(Bin(2d, p) >= d) for d = 1..d_max, with drift from K(p)."""
    if not 0.0 < p < 0.5:
        raise ValueError(f"p must lie in (0, 1/2), got {p}")
    K = -math.log(4.0 * p * (1.0 - p))
    ds = np.arange(1, d_max + 1)
    rates = np.array([-binom_logtail(2 * d, p, d) / d for d in ds])
    return ds, rates, np.abs(rates - K)
