"""Gliding-hump construction.

Given a law with infinite p-th moment, split the floor values into consecutive
blocks ``I_l = [a_{l-1}, a_l)`` whose weighted sums
``S_l = sum_{k in I_l} P(floor X = k) k^p`` are each at least one, and set

    g(x) = floor(x)^{p-1} / (l S_l)        for x in I_l.

Then ``E g(X)^q = sum_l 1/(l^q S_l^{q-1})`` is finite while block ``l``
contributes exactly ``1/l`` to ``E[floor(X) g(X)]``, so the latter diverges
like the harmonic series.  Only a finite prefix of blocks is stored; ``g`` is
zero beyond the last built block.
"""
from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .dists import Distribution

DEFAULT_SCAN_CAP = 10**60


class MomentAppearsFinite(ValueError):
    """The block scan did not reach sum 1 within the scan cap."""


class OutOfRange(ValueError):
    """Argument lies beyond the last built block."""


@dataclass(frozen=True)
class HumpFunction:
    p: float
    q: float
    boundaries: tuple  # a_0 = 0 < a_1 < ... < a_L, python ints
    block_sums: tuple  # S_1 .. S_L
    scale: float = 1.0

    @property
    def n_blocks(self) -> int:
        return len(self.block_sums)

    @property
    def top(self) -> int:
        """a_L: g is defined on floor values below this."""
        return self.boundaries[-1]

    def block_of(self, k: int) -> int:
        """1-based block index containing floor value k."""
        if k < 0 or k >= self.top:
            raise OutOfRange(f"floor value {k} outside built blocks [0, {self.top})")
        return bisect.bisect_right(self.boundaries, k)

    @functools.cached_property
    def _sums(self) -> np.ndarray:
        return np.asarray(self.block_sums, dtype=float)

    def coefficient(self, ell):
        """scale / (l S_l), the multiplier of floor(x)^{p-1} in block l."""
        if isinstance(ell, (int, np.integer)):
            return self.scale / (int(ell) * self.block_sums[int(ell) - 1])
        ell = np.asarray(ell)
        return self.scale / (ell * self._sums[ell - 1])

    def __call__(self, x):
        return eval_hump(self, x)

    def scaled(self, factor: float) -> "HumpFunction":
        return HumpFunction(self.p, self.q, self.boundaries, self.block_sums, self.scale * factor)

    def max_value(self, ell: int) -> float:
        """Largest value of g on block l."""
        return float(self.coefficient(ell)) * float(self.boundaries[ell] - 1) ** (self.p - 1)

    def first_floor_above(self, ell: int, t: float) -> int:
        """Smallest floor value j in block l with g(j) > t (may equal a_l: none)."""
        lo, hi = self.boundaries[ell - 1], self.boundaries[ell]
        if t < 0:
            return lo
        c = float(self.coefficient(ell))
        root = (t / c) ** (1.0 / (self.p - 1))
        if root >= hi:
            return hi
        j = max(lo, int(math.floor(root)))
        # fix float rounding so that g(j) > t exactly at the returned index
        while j > lo and c * float(j - 1) ** (self.p - 1) > t:
            j -= 1
        while j < hi and not c * float(j) ** (self.p - 1) > t:
            j += 1
        return j

    def first_floor_at_least(self, ell: int, t: float) -> int:
        """Smallest floor value j in block l with g(j) >= t."""
        lo, hi = self.boundaries[ell - 1], self.boundaries[ell]
        c = float(self.coefficient(ell))
        if t <= 0:
            return lo
        root = (t / c) ** (1.0 / (self.p - 1))
        if root >= hi:
            return hi
        j = max(lo, int(math.ceil(root)))
        while j > lo and c * float(j - 1) ** (self.p - 1) >= t:
            j -= 1
        while j < hi and not c * float(j) ** (self.p - 1) >= t:
            j += 1
        return j


def _minimal_block_end(d: Distribution, p: float, a: int, scan_cap: int) -> tuple[int, float]:
    """Smallest b > a with sum_{a <= k < b} psi_k k^p >= 1, and that sum."""
    width = 1
    while True:
        if width > scan_cap:
            raise MomentAppearsFinite(
                f"p-moment appears finite: block starting at {a} did not reach sum 1 within {scan_cap} integers"
            )
        if d.floor_power_sum(p, a, a + width) >= 1.0:
            break
        width *= 2
    lo, hi = a + width // 2, a + width  # F(lo) < 1 <= F(hi), except lo == a
    if width == 1:
        return a + 1, d.floor_power_sum(p, a, a + 1)
    while hi - lo > 1 and hi - lo > lo * 2.0**-50:
        mid = (lo + hi) // 2
        if d.floor_power_sum(p, a, mid) >= 1.0:
            hi = mid
        else:
            lo = mid
    return hi, d.floor_power_sum(p, a, hi)


def build_gliding_hump(
    d: Distribution, p: float, max_blocks: int = 50, scan_cap: int = DEFAULT_SCAN_CAP
) -> HumpFunction:
    """Minimal block boundaries for the hump of order ``p`` on law ``d``.

    Each ``a_l`` is the smallest integer making ``S_l >= 1``.  Raises
    ``MomentAppearsFinite`` if a block would need more than ``scan_cap``
    integers, which is how a finite p-th moment shows up.
    """
    if not 1 < p <= 2:
        raise ValueError("p must lie in (1, 2]")
    if max_blocks < 1:
        raise ValueError("max_blocks must be positive")
    q = p / (p - 1)
    bounds = [0]
    sums = []
    for _ in range(max_blocks):
        b, S = _minimal_block_end(d, p, bounds[-1], scan_cap)
        bounds.append(b)
        sums.append(S)
    return HumpFunction(p, q, tuple(bounds), tuple(sums))


def eval_hump(g: HumpFunction, x):
    """g(x); raises OutOfRange beyond the last built block."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("x must be nonnegative")
    k = np.floor(xa)
    if np.any(k >= float(g.top)):
        raise OutOfRange(f"x beyond last built block (a_L = {g.top})")
    edges = np.array([float(b) for b in g.boundaries])
    ell = np.searchsorted(edges, k, side="right")
    out = g.coefficient(np.maximum(ell, 1)) * k ** (g.p - 1)
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class QMoment:
    """Block-formula value of E g(X)^q over built blocks, plus a bound on the unbuilt rest."""

    value: float
    remainder_bound: float


def hump_q_moment(g: HumpFunction, d: Distribution | None = None) -> QMoment:
    """sum_l scale^q / (l^q S_l^{q-1}) with remainder bound scale^q sum_{l > L} l^{-q}."""
    ell = np.arange(1, g.n_blocks + 1, dtype=float)
    S = np.asarray(g.block_sums)
    value = math.fsum(g.scale**g.q / (ell**g.q * S ** (g.q - 1)))
    rest = g.scale**g.q * float(special.zeta(g.q, g.n_blocks + 1.0))
    return QMoment(value, rest)


def hump_q_moment_direct(g: HumpFunction, d: Distribution) -> float:
    """E g(X)^q restricted to built blocks, summed block by block from the law."""
    total = []
    for ell in range(1, g.n_blocks + 1):
        lo, hi = g.boundaries[ell - 1], g.boundaries[ell]
        c = float(g.coefficient(ell))
        total.append(c**g.q * d.floor_power_sum(g.p, lo, hi))
    return math.fsum(total)


def block_cross_moments(g: HumpFunction, d: Distribution, L: int | None = None) -> np.ndarray:
    """Per-block sum_{k in I_l} psi_k k g(k), recomputed from the law (expected 1/l each)."""
    L = g.n_blocks if L is None else L
    if L > g.n_blocks:
        raise OutOfRange(f"only {g.n_blocks} blocks built")
    out = np.empty(L)
    for ell in range(1, L + 1):
        lo, hi = g.boundaries[ell - 1], g.boundaries[ell]
        out[ell - 1] = float(g.coefficient(ell)) * d.floor_power_sum(g.p, lo, hi)
    return out


def hump_cross_moment_lower(g: HumpFunction, d: Distribution, L: int | None = None) -> float:
    """sum_{l <= L} sum_{k in I_l} psi_k k g(k): a lower bound for E X g(X) equal to scale * H_L."""
    return math.fsum(block_cross_moments(g, d, L))


def harmonic(L: int) -> float:
    return math.fsum(1.0 / np.arange(1, L + 1))


def level_mass(g: HumpFunction, d: Distribution, k: float) -> float:
    """P(g(X) >= k) over the built blocks."""
    if k <= 0:
        return 1.0
    total = []
    for ell in range(1, g.n_blocks + 1):
        j = g.first_floor_at_least(ell, k)
        hi = g.boundaries[ell]
        if j < hi:
            total.append(float(d.mass_between(float(j), float(hi))))
    return math.fsum(total)


def truncation_gap(g: HumpFunction, d: Distribution) -> float:
    """Upper bound on E[g_full(X); X >= a_L] for any continuation of the blocks.

    By Hoelder, E[g 1(X >= a_L)] <= (sum_{l>L} l^{-q})^{1/q} P(X >= a_L)^{1/p};
    it bounds the probability that the untruncated last-exit time differs
    from the one built from the stored prefix.
    """
    rest = hump_q_moment(g).remainder_bound
    return rest ** (1 / g.q) * float(d.tail(float(g.top))) ** (1 / g.p)
