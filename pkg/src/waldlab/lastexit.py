"""Last-exit times and their exact laws.

For i.i.d. ``X_1, X_2, ...`` and target sets ``B_k`` the last-exit time is
``T = max{k : X_k in B_k}`` (``T = 0`` if no index hits).  With
``p_k = P(X in B_k)`` independence gives

    P(T = k) = p_k * prod_{j > k} (1 - p_j),

so ``T`` can be drawn directly, after which ``X_T`` is a draw from ``X | X in B_T``
and ``S_T`` adds ``T - 1`` unconditional draws (indices below ``T`` are not
constrained by the event ``T = k``).

Two kinds of target sets are supported: thresholds ``[f(k), inf)`` and the
level sets ``{x : g(x) >= k}`` of a gliding hump ``g``.  Infinite tails of the
sequence ``p_k`` are never cut silently; every truncation carries a certified
bound.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special

from .dists import Distribution, ExtendedMoment
from .hump import HumpFunction, truncation_gap
from .streams import RandomStream

DEFAULT_TOL = 1e-6
MAX_HORIZON = 2**22
_CHUNK = 4_000_000  # floats per simulation block
_TABLE = 1 << 21  # floor values tabulated for hump block sums


class AdmissibilityError(ValueError):
    """The exceedance probabilities are not certifiably summable."""


class HorizonError(ValueError):
    """No horizon up to the cap brings the residual below the tolerance."""


class PrecisionError(ValueError):
    """A moment enclosure is wider than the requested relative tolerance."""


class CertificationError(ValueError):
    """An exponential moment rate lies beyond what the tail bounds can certify."""

    def __init__(self, message: str, max_rate: float):
        super().__init__(message)
        self.max_rate = max_rate


class UnsupportedSchedule(ValueError):
    """The operation needs information this schedule does not provide."""


class NeedsMoreBlocks(ValueError):
    """The stored hump prefix is too short for the requested accuracy."""


# ---------------------------------------------------------------------------
# weights for tail sums
# ---------------------------------------------------------------------------
# A weight describes sum_{i > K} p_i W_K(i) with
#   ("count",)        W = 1                      (plain tail sum R_{K+1})
#   ("power", beta)   W = i^beta - K^beta
#   ("exp", c)        W = e^{c i} - e^{c K}
# Each is the cumulative increment of the moment weights k^beta or e^{ck}, so
# that sum_{k > K} w_k P(T >= k) <= sum_{i > K} p_i W_K(i).


def _weight_terms(weight, K: int, i: np.ndarray, log_p: np.ndarray) -> np.ndarray:
    kind = weight[0]
    with np.errstate(over="ignore", invalid="ignore"):
        if kind == "count":
            out = np.exp(log_p)
        elif kind == "power":
            b = weight[1]
            out = np.exp(log_p) * (i**b - float(K) ** b)
        else:
            c = weight[1]
            out = np.exp(log_p + c * i) - np.exp(log_p + c * K)
    return np.where(np.isfinite(log_p), out, 0.0)


@functools.lru_cache(maxsize=None)
def _faulhaber(m: int) -> tuple:
    """Coefficients (ascending powers of y) of sum_{i=1}^{y} i^m."""
    # Bernoulli numbers with B_1 = +1/2
    B = [Fraction(1)]
    for n in range(1, m + 1):
        B.append(-sum(math.comb(n + 1, j) * B[j] for j in range(n)) / (n + 1))
    if m >= 1:
        B[1] = Fraction(1, 2)
    coef = [Fraction(0)] * (m + 2)
    for j in range(m + 1):
        coef[m + 1 - j] += Fraction(math.comb(m + 1, j)) * B[j] / (m + 1)
    return tuple(coef)


def _shifted_weight_poly(weight, K: int) -> np.ndarray:
    """h(y) = sum_{i=K+1}^{K+y} W_K(i) as ascending coefficients in y (integer powers only)."""
    if weight[0] == "count":
        return np.array([0.0, 1.0])
    beta = int(weight[1])
    # (K+i)^beta - K^beta = sum_{m>=1} C(beta,m) K^{beta-m} i^m
    out = np.zeros(beta + 2)
    for m in range(1, beta + 1):
        fc = np.array([float(x) for x in _faulhaber(m)])
        out[: len(fc)] += math.comb(beta, m) * float(K) ** (beta - m) * fc
    return out


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------
class ExceedanceSchedule:
    """Common interface: p_k, certified tail sums, and draws from X | X in B_k."""

    kind = "abstract"

    def probs(self, k) -> np.ndarray:
        raise NotImplementedError

    def log_probs(self, k) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs(k))

    def weighted_tail_bounds(self, K: int, weight=("count",), abs_tol: float = 0.0) -> tuple[float, float]:
        """Enclosure of sum_{i > K} p_i W_K(i)."""
        raise NotImplementedError

    def tail_sum_bounds(self, K: int) -> tuple[float, float]:
        """Enclosure of R_{K+1} = sum_{i > K} p_i."""
        return self.weighted_tail_bounds(K, ("count",))

    def draw_in_set(self, rng: RandomStream, k: np.ndarray) -> np.ndarray:
        raise UnsupportedSchedule(f"{self.kind} schedule has no conditional sampler")

    def in_set(self, x: np.ndarray, k: np.ndarray) -> np.ndarray:
        raise UnsupportedSchedule(f"{self.kind} schedule has no membership test")

    def set_partial_mean(self, k: int) -> float:
        """E[X; X in B_k]."""
        raise UnsupportedSchedule(f"no closed-form conditional mean for {self.kind} schedule")

    def max_exp_rate(self) -> float:
        """Supremum of c for which E e^{cT} can be certified."""
        return 0.0

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class ExplicitSchedule(ExceedanceSchedule):
    """Finitely many given p_1..p_n, zero afterwards (no underlying law)."""

    values: tuple
    kind = "explicit"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any((v < 0) | (v > 1)) or not np.all(np.isfinite(v)):
            raise ValueError("probabilities must lie in [0, 1]")

    def probs(self, k):
        k = np.asarray(k)
        v = np.asarray(self.values, dtype=float)
        inside = (k >= 1) & (k <= len(v))
        return np.where(inside, v[np.clip(k, 1, max(len(v), 1)) - 1] if len(v) else 0.0, 0.0)

    def weighted_tail_bounds(self, K, weight=("count",), abs_tol=0.0):
        n = len(self.values)
        if K >= n:
            return 0.0, 0.0
        i = np.arange(K + 1, n + 1, dtype=float)
        s = math.fsum(_weight_terms(weight, K, i, self.log_probs(i.astype(int))))
        return s, s

    def max_exp_rate(self):
        return math.inf

    def describe(self):
        return {"kind": self.kind, "values": list(self.values)}


def _moment_candidates(d: Distribution) -> list[tuple[float, float]]:
    """(r, E X^r) pairs with finite moments, used for Markov tail bounds."""
    r_sup, attained = d.moment_index
    if math.isinf(r_sup):
        rs = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
    else:
        rs = [r_sup * (1 - 2.0**-j) for j in range(1, 14)]
        if attained:
            rs.append(r_sup)
    out = []
    for r in rs:
        m = d.moment(r)
        if m.finite:
            out.append((r, m.value + m.error))
    return out


@dataclass(frozen=True, eq=False)
class ThresholdSchedule(ExceedanceSchedule):
    """B_k = [f(k), inf) with f(k) = e^{rate k} ("exp") or k^{rate} ("power")."""

    dist: Distribution
    growth: str
    rate: float
    horizon: int = 64
    kind = "threshold"
    _moments: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.growth not in ("exp", "power"):
            raise ValueError("growth must be 'exp' or 'power'")
        if not self.rate > 0:
            raise ValueError("growth rate must be positive")
        object.__setattr__(self, "_moments", _moment_candidates(self.dist))

    def threshold(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(self.rate * k) if self.growth == "exp" else k**self.rate

    def probs(self, k):
        return np.asarray(self.dist.tail(self.threshold(k)), dtype=float)

    def log_probs(self, k):
        return np.asarray(self.dist.log_tail(self.threshold(k)), dtype=float)

    def _markov(self, K2: int, weight) -> float:
        """Bound on sum_{i > K2} p_i W(i) using p_i <= E X^r / f(i)^r."""
        best = math.inf
        kind = weight[0]
        for r, m in self._moments:
            if self.growth == "power":
                if kind == "exp":
                    continue
                b = 0.0 if kind == "count" else weight[1]
                s = self.rate * r - b
                if s <= 1:
                    continue
                tail = float(special.zeta(s, K2 + 1.0))
            else:
                ar = self.rate * r
                if kind == "exp":
                    e = weight[1] - ar
                    if e >= 0:
                        continue
                    tail = math.exp(e * (K2 + 1)) / -math.expm1(e)
                else:
                    b = 0.0 if kind == "count" else weight[1]
                    rho = ((K2 + 2) / (K2 + 1)) ** b * math.exp(-ar)
                    if rho >= 1:
                        continue
                    tail = (K2 + 1.0) ** b * math.exp(-ar * (K2 + 1)) / (1 - rho)
            best = min(best, m * tail)
        return best

    def weighted_tail_bounds(self, K, weight=("count",), abs_tol=0.0):
        explicit = []
        lo = K
        width = max(64, K)
        while True:
            hi = lo + width
            i = np.arange(lo + 1, hi + 1, dtype=float)
            explicit.append(math.fsum(_weight_terms(weight, K, i, self.log_probs(i))))
            s = math.fsum(explicit)
            m = self._markov(hi, weight)
            if m <= max(abs_tol, 1e-3 * s) or hi - K >= MAX_HORIZON:
                return s, s + m
            lo = hi
            width *= 2

    def draw_in_set(self, rng, k):
        return self.dist.sample_conditional_tail(rng, self.threshold(k), size=np.shape(k))

    def in_set(self, x, k):
        return x >= self.threshold(k)

    def set_partial_mean(self, k):
        return self.dist.partial_mean(float(self.threshold(k)), math.inf)

    def max_exp_rate(self):
        if self.growth == "power":
            return 0.0
        r_sup = max((r for r, _ in self._moments), default=0.0)
        return self.rate * r_sup

    def describe(self):
        f = f"exp({self.rate:g} k)" if self.growth == "exp" else f"k^{self.rate:g}"
        return {"kind": self.kind, "threshold": f, "law": self.dist.to_dict()}


def make_threshold_schedule(d: Distribution, growth: str = "exp", rate: float = 1.0, K: int = 64) -> ThresholdSchedule:
    """Threshold schedule, rejected unless sum_k p_k is certifiably finite.

    ``growth="power"`` with ``rate = 1/(alpha-1)`` gives the thresholds
    ``k^{1/(alpha-1)}``; ``growth="exp"`` gives ``e^{rate k}``.
    """
    s = ThresholdSchedule(d, growth, rate, K)
    Kc = max(K, 1)
    while Kc <= MAX_HORIZON:
        _, hi = s.tail_sum_bounds(Kc)
        if hi < 1:
            return s
        Kc *= 4
    raise AdmissibilityError(
        f"sum of P(X >= f(k)) is not certifiably finite for f(k) = {s.describe()['threshold']} under {d}"
    )


@dataclass(frozen=True, eq=False)
class HumpSchedule(ExceedanceSchedule):
    """B_k = {x : g(x) >= k} for a (truncated) gliding hump g."""

    dist: Distribution
    g: HumpFunction
    kind = "hump"

    @property
    def truncation_gap(self) -> float:
        return truncation_gap(self.g, self.dist)

    @functools.cached_property
    def level_cap(self) -> int:
        """floor of max g over the stored blocks: p_k = 0 for every larger k."""
        g = self.g
        e = g.p - 1
        top = max(float(g.coefficient(ell)) * float(g.boundaries[ell] - 1) ** e for ell in range(1, g.n_blocks + 1))
        return int(math.floor(top)) if top < 2**62 else 2**62

    def _level_start(self, ell: int, k: np.ndarray) -> np.ndarray:
        """Vectorized first floor value j in block ell with g(j) >= k (a_ell if none)."""
        g = self.g
        lo, hi = float(g.boundaries[ell - 1]), float(g.boundaries[ell])
        c = float(g.coefficient(ell))
        e = g.p - 1
        k = np.asarray(k, dtype=float)
        with np.errstate(over="ignore"):
            j = np.ceil((k / c) ** (1.0 / e))
        j = np.clip(j, lo, hi)
        for _ in range(3):
            down = (j > lo) & (c * np.maximum(j - 1, 0.0) ** e >= k)
            up = (j < hi) & ~(c * j**e >= k)
            if not (down.any() or up.any()):
                break
            j = j - down + up
        return np.where(k <= 0, lo, j)

    def probs(self, k):
        k = np.asarray(k, dtype=float)
        flat = k.ravel()
        order = np.argsort(flat, kind="stable")
        ks = flat[order]
        out = np.zeros(ks.shape)
        g, d = self.g, self.dist
        e = g.p - 1
        for ell in range(1, g.n_blocks + 1):
            lo, hi = float(g.boundaries[ell - 1]), float(g.boundaries[ell])
            c = float(g.coefficient(ell))
            g_lo = c * lo**e
            g_hi = c * (hi - 1) ** e
            i0 = np.searchsorted(ks, g_lo, side="right")
            i1 = np.searchsorted(ks, g_hi, side="right")
            if i0:
                out[:i0] += float(d.mass_between(lo, hi))
            if i1 > i0:
                j = self._level_start(ell, ks[i0:i1])
                out[i0:i1] += d.mass_between(j, hi)
        res = np.empty_like(out)
        res[order] = out
        res = np.where(flat < 1, np.nan, res)  # p_k is only defined for k >= 1
        return res.reshape(k.shape)

    def _terms(self, x: float) -> np.ndarray:
        """P(floor X = j) j^x for the tabulated floor values j = 0, 1, ..."""
        cache = self.__dict__.setdefault("_terms_cache", {})
        if x not in cache:
            j = np.arange(min(self.g.top, _TABLE), dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                powers = np.where(j > 0, j**x, 1.0 if x == 0 else 0.0)
            cache[x] = np.asarray(self.dist.floor_pmf(j)) * powers
        return cache[x]

    def _power_sum(self, x: float, j: int, hi: int) -> float:
        """sum_{j <= k < hi} P(floor X = k) k^x."""
        if hi <= _TABLE and hi <= self.g.top:
            return float(np.sum(self._terms(x)[j:hi]))
        return self.dist.floor_power_sum(x, j, hi)

    def _poly_expect(self, t: float, coeffs: np.ndarray) -> float:
        """E[P(g(X) - t); g(X) > t] for a polynomial P with ascending coefficients."""
        g = self.g
        e = g.p - 1
        deg = len(coeffs) - 1
        # coefficients of P(x - t) in powers of x
        px = np.zeros(deg + 1)
        for m, a in enumerate(coeffs):
            if a == 0:
                continue
            for i in range(m + 1):
                px[i] += a * math.comb(m, i) * (-t) ** (m - i)
        total = []
        for ell in range(1, g.n_blocks + 1):
            hi = g.boundaries[ell]
            c = float(g.coefficient(ell))
            if c * float(hi - 1) ** e <= t:
                continue
            j = g.first_floor_above(ell, t)
            if j >= hi:
                continue
            block = []
            for i, a in enumerate(px):
                if a == 0:
                    continue
                block.append(a * c**i * self._power_sum(i * e, j, hi))
            total.append(max(math.fsum(block), 0.0))
        return math.fsum(total)

    def weighted_tail_bounds(self, K, weight=("count",), abs_tol=0.0):
        kind = weight[0]
        if K >= self.level_cap:
            return 0.0, 0.0
        if kind == "exp":
            raise CertificationError("exponential moments of hump last-exit times are not certifiable", 0.0)
        if kind == "power" and float(weight[1]) != int(weight[1]):
            # sum_{i=K+1}^{n} i^b <= (n+1)^{b+1} - ... crude: bounded by n (n)^b <= g^{b+1}
            b = float(weight[1])
            upper = self._poly_expect_real(K, b + 1.0)
            return 0.0, upper
        h = _shifted_weight_poly(weight, K)
        upper = self._poly_expect(float(K), h)
        lower = self._poly_expect(float(K) + 1.0, h)
        return lower, upper

    def _poly_expect_real(self, t: float, power: float) -> float:
        """E[g(X)^power; g(X) > t]."""
        g, d = self.g, self.dist
        e = g.p - 1
        total = []
        for ell in range(1, g.n_blocks + 1):
            hi = g.boundaries[ell]
            j = g.first_floor_above(ell, t)
            if j < hi:
                total.append(float(g.coefficient(ell)) ** power * d.floor_power_sum(power * e, j, hi))
        return math.fsum(total)

    def block_level_masses(self, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-block level-set starts and masses, shapes (len(k), L)."""
        g, d = self.g, self.dist
        k = np.asarray(k, dtype=float)
        L = g.n_blocks
        starts = np.empty((k.size, L))
        masses = np.empty((k.size, L))
        for ell in range(1, L + 1):
            hi = float(g.boundaries[ell])
            j = self._level_start(ell, k)
            starts[:, ell - 1] = j
            masses[:, ell - 1] = d.mass_between(j, hi)
        return starts, masses

    def draw_in_set(self, rng, k):
        k = np.asarray(k)
        out = np.empty(k.shape, dtype=float)
        uniq, inv = np.unique(k, return_inverse=True)
        starts, masses = self.block_level_masses(uniq)
        his = np.array([float(b) for b in self.g.boundaries[1:]])
        cum = np.cumsum(masses, axis=1)
        tot = cum[:, -1]
        if np.any(tot <= 0):
            raise UnsupportedSchedule("empty level set requested")
        u = rng.random(k.size) * tot[inv]
        blk = np.minimum((cum[inv] <= u[:, None]).sum(axis=1), masses.shape[1] - 1)
        lo = starts[inv, blk]
        hi = his[blk]
        out.flat[:] = self.dist._draw_between(rng, lo, hi, masses[inv, blk])
        return out

    def values(self, x) -> np.ndarray:
        """g(x), taken as zero beyond the stored blocks."""
        g = self.g
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        edges = np.array([float(b) for b in g.boundaries])
        ell = np.searchsorted(edges, k, side="right")
        inside = ell <= g.n_blocks
        coef = g.coefficient(np.clip(ell, 1, g.n_blocks))
        return np.where(inside, coef * k ** (g.p - 1), 0.0)

    def in_set(self, x, k):
        return self.values(x) >= k

    def set_partial_mean(self, k):
        total = []
        for ell in range(1, self.g.n_blocks + 1):
            j = self.g.first_floor_at_least(ell, k)
            hi = self.g.boundaries[ell]
            if j < hi:
                total.append(self.dist.partial_mean(float(j), float(hi)))
        return math.fsum(total)

    def describe(self):
        return {
            "kind": self.kind,
            "law": self.dist.to_dict(),
            "p": self.g.p,
            "blocks": self.g.n_blocks,
            "scale": self.g.scale,
            "top": str(self.g.top),
        }


def make_hump_schedule(d: Distribution, g: HumpFunction, max_gap: float = DEFAULT_TOL) -> HumpSchedule:
    """Level-set schedule of ``g``; the stored blocks must carry all but ``max_gap`` of the law of T."""
    s = HumpSchedule(d, g)
    gap = s.truncation_gap
    if gap > max_gap:
        raise NeedsMoreBlocks(f"truncation gap {gap:.3g} exceeds {max_gap:.3g}; build more blocks")
    return s


# ---------------------------------------------------------------------------
# law of T
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TimePmf:
    """P(T = k) for k = 0..horizon; ``residual`` = P(T > horizon) <= certified tail sum."""

    pmf: np.ndarray
    residual: float
    horizon: int

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def mean(self, fn=lambda k: k) -> float:
        k = np.arange(self.horizon + 1)
        return math.fsum(self.pmf * fn(k))


def _find_horizon(sched: ExceedanceSchedule, tol: float, start: int = 1) -> tuple[int, float, float]:
    """Smallest K (up to doubling granularity) with certified R_{K+1} <= tol."""
    K = max(start, 1)
    lo_K = 0
    cap = getattr(sched, "level_cap", None)
    if cap is not None and cap <= MAX_HORIZON:
        K = min(K, max(cap, 1))
    while True:
        lo, hi = sched.tail_sum_bounds(K)
        if hi <= tol:
            break
        if K >= MAX_HORIZON:
            raise HorizonError(f"tail sum still {hi:.3g} > {tol:.3g} at horizon {K}")
        lo_K = K
        K = K * 2 if cap is None else min(K * 2, max(cap, 1))
    best = (K, lo, hi)
    a, b = lo_K, K
    while b - a > max(1, a // 64):
        mid = (a + b) // 2
        lo, hi = sched.tail_sum_bounds(mid)
        if hi <= tol:
            b, best = mid, (mid, lo, hi)
        else:
            a = mid
    return best


def _log_suffix(p: np.ndarray) -> np.ndarray:
    """S_k = sum_{i=k}^{K} log(1 - p_i) for k = 1..K+1 (S_{K+1} = 0)."""
    with np.errstate(divide="ignore"):
        lp = np.log1p(-p)
    s = np.concatenate([np.cumsum(lp[::-1])[::-1], [0.0]])
    return s


def time_pmf(sched: ExceedanceSchedule, tol: float = DEFAULT_TOL) -> TimePmf:
    """Law of T up to a horizon K* whose certified tail sum is at most ``tol``.

    The factor prod_{j > K*} (1 - p_j) is estimated as ``exp(-R)`` with R the
    midpoint of the tail-sum enclosure; masses plus residual sum to one.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    K, r_lo, r_hi = _find_horizon(sched, tol)
    p = sched.probs(np.arange(1, K + 1))
    S = _log_suffix(p)
    logQ = -(r_lo + r_hi) / 2
    pmf = np.empty(K + 1)
    pmf[0] = math.exp(S[0] + logQ)
    pmf[1:] = p * np.exp(S[1:] + logQ)
    residual = max(0.0, 1.0 - math.fsum(pmf))
    return TimePmf(pmf, residual, K)


def _cached_pmf(sched: ExceedanceSchedule, tol: float) -> TimePmf:
    """time_pmf memoized on the schedule itself (so it travels with pickled copies)."""
    cache = sched.__dict__.setdefault("_pmf_cache", {})
    if tol not in cache:
        cache[tol] = time_pmf(sched, tol)
    return cache[tol]


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LastExitDraw:
    """(T, X_T, S_T), scalars or equally shaped arrays; X_T = S_T = 0 when T = 0."""

    T: np.ndarray
    X_T: np.ndarray
    S_T: np.ndarray


def _sums_of_unconditional(d: Distribution, rng: RandomStream, counts: np.ndarray) -> np.ndarray:
    """For each entry n of ``counts``, the sum of n fresh draws of X."""
    counts = np.asarray(counts, dtype=np.int64)
    out = np.zeros(counts.shape, dtype=float)
    flat = counts.ravel()
    res = out.ravel()
    start = 0
    while start < flat.size:
        # take as many entries as fit in one chunk of draws
        csum = np.cumsum(flat[start:])
        stop = start + max(1, int(np.searchsorted(csum, _CHUNK, side="right")))
        block = flat[start:stop]
        total = int(block.sum())
        if total:
            x = d.sample(rng, total)
            offs = np.concatenate([[0], np.cumsum(block)[:-1]])
            nz = block > 0
            res[start:stop][nz] = np.add.reduceat(x, offs[nz])
        start = stop
    return res.reshape(counts.shape)


def sample_last_exit(
    sched: ExceedanceSchedule, d: Distribution, rng: RandomStream, size: int | None = None, tol: float = DEFAULT_TOL
) -> LastExitDraw:
    """Exact joint draws of (T, X_T, S_T).

    T comes from ``time_pmf`` (conditioned on T <= K*, a change of law of at
    most ``tol`` in total variation), X_T from X | X in B_T and S_T adds T - 1
    unconditional draws.
    """
    law = _cached_pmf(sched, tol)
    n = 1 if size is None else int(size)
    cdf = np.cumsum(law.pmf)
    u = rng.random(n) * cdf[-1]
    T = np.minimum(np.searchsorted(cdf, u, side="right"), law.horizon).astype(np.int64)
    X = np.zeros(n)
    hit = T > 0
    if hit.any():
        X[hit] = sched.draw_in_set(rng, T[hit])
    S = X + _sums_of_unconditional(d, rng, np.maximum(T - 1, 0))
    if size is None:
        return LastExitDraw(int(T[0]), float(X[0]), float(S[0]))
    return LastExitDraw(T, X, S)


@dataclass(frozen=True)
class NaiveDraw:
    draw: LastExitDraw
    residual: float
    horizon: int


def sample_naive(
    d: Distribution, sched: ExceedanceSchedule, rng: RandomStream, horizon: int | None = None, size: int = 1
) -> NaiveDraw:
    """Brute-force (T, X_T, S_T) by simulating X_1..X_horizon and scanning for the last hit."""
    if horizon is None:
        horizon = _find_horizon(sched, DEFAULT_TOL)[0]
    horizon = max(int(horizon), 1)
    residual = sched.tail_sum_bounds(horizon)[1]
    T = np.zeros(size, dtype=np.int64)
    X = np.zeros(size)
    S = np.zeros(size)
    rows = max(1, _CHUNK // horizon)
    k = np.arange(1, horizon + 1)
    for start in range(0, size, rows):
        m = min(rows, size - start)
        path = d.sample(rng, m * horizon).reshape(m, horizon)
        hits = sched.in_set(path, k[None, :])
        any_hit = hits.any(axis=1)
        last = horizon - 1 - np.argmax(hits[:, ::-1], axis=1)
        t = np.where(any_hit, last + 1, 0)
        csum = np.cumsum(path, axis=1)
        idx = np.maximum(t - 1, 0)
        rows_i = np.arange(m)
        T[start : start + m] = t
        X[start : start + m] = np.where(any_hit, path[rows_i, idx], 0.0)
        S[start : start + m] = np.where(any_hit, csum[rows_i, idx], 0.0)
    return NaiveDraw(LastExitDraw(T, X, S), residual, horizon)


def sample_first_exit(d: Distribution, c: float, rng: RandomStream, size: int) -> LastExitDraw:
    """Exact draws of (tau, X_tau, S_tau) for the stopping time tau = min{k : X_k >= c}."""
    pc = float(d.tail(c))
    if not pc > 0:
        raise ValueError(f"P(X >= {c}) = 0: the stopping time is infinite")
    tau = rng.geometric(pc, size).astype(np.int64)
    X = d.sample_conditional_tail(rng, c, size=size)
    below = 1.0 - pc
    counts = tau - 1
    S = X.copy()
    if below > 0 and counts.any():
        # sums of tau-1 draws of X | X < c, in chunks
        flat_total = int(counts.sum())
        pieces = []
        done = 0
        while done < flat_total:
            m = min(_CHUNK, flat_total - done)
            pieces.append(d._draw_between(rng, np.zeros(m), np.full(m, float(c)), np.full(m, below)))
            done += m
        x = np.concatenate(pieces)
        offs = np.concatenate([[0], np.cumsum(counts)[:-1]])
        nz = counts > 0
        S[nz] += np.add.reduceat(x, offs[nz])
    return LastExitDraw(tau, X, S)


# ---------------------------------------------------------------------------
# certified moments of T
# ---------------------------------------------------------------------------
def _moment_enclosure(sched: ExceedanceSchedule, K: int, weight) -> tuple[float, float]:
    """Enclosure of E w(T) with the explicit part up to K and a certified tail."""
    p = sched.probs(np.arange(1, K + 1))
    S = _log_suffix(p)[:-1]  # S_k for k = 1..K
    r_lo, r_hi = sched.tail_sum_bounds(K)
    if r_hi >= 1:
        return 0.0, math.inf
    logQ_lo = -r_hi / (1 - r_hi)
    logQ_hi = -r_lo
    k = np.arange(1, K + 1, dtype=float)
    if weight[0] == "power":
        b = weight[1]
        w = k**b - (k - 1) ** b
        base = 0.0
    else:
        c = weight[1]
        w = np.exp(c * k) - np.exp(c * (k - 1))
        base = 1.0
    # P(T >= k) = 1 - exp(S_k) Q with Q in [exp(logQ_lo), exp(logQ_hi)]
    explicit_lo = math.fsum(w * -np.expm1(S + logQ_hi))
    explicit_hi = math.fsum(w * -np.expm1(S + logQ_lo))
    a_lo, a_hi = sched.weighted_tail_bounds(K, weight)
    return base + explicit_lo + a_lo * max(0.0, 1 - r_hi / 2), base + explicit_hi + a_hi


def _certify(sched, weight, tol, label) -> ExtendedMoment:
    K = 16
    best = None
    while K <= MAX_HORIZON:
        lo, hi = _moment_enclosure(sched, K, weight)
        if math.isfinite(hi):
            value, half = (lo + hi) / 2, (hi - lo) / 2
            best = (value, half, K)
            if half <= tol * abs(value) or half == 0:
                return ExtendedMoment(value, "series", half)
            if weight[0] == "exp" and weight[1] * K > 600:
                break
        K *= 2
    if best is None:
        raise PrecisionError(f"{label}: no finite enclosure up to horizon {MAX_HORIZON}")
    value, half, K = best
    raise PrecisionError(
        f"{label}: enclosure half-width {half:.3g} exceeds {tol:g} x value {value:.6g} at horizon {K}"
    )


def t_power_moment(sched: ExceedanceSchedule, beta: float, tol: float = DEFAULT_TOL) -> ExtendedMoment:
    """Certified E T^beta: explicit sum up to a horizon plus a bounded tail."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return _certify(sched, ("power", float(beta)), tol, f"E T^{beta:g}")


def t_exp_moment(sched: ExceedanceSchedule, c: float, tol: float = DEFAULT_TOL) -> ExtendedMoment:
    """Certified E e^{cT}; raises CertificationError beyond the certifiable rate."""
    if not c > 0:
        raise ValueError("c must be positive")
    c_max = sched.max_exp_rate()
    if not c < c_max and not (math.isinf(c_max)):
        raise CertificationError(
            f"E exp({c:g} T) cannot be certified; tail bounds cover only c < {c_max:g}", c_max
        )
    return _certify(sched, ("exp", float(c)), tol, f"E exp({c:g} T)")


def markov_tail_bound(mean: float, k: int, rate: float = 1.0) -> float:
    """sum_{i >= k} E X e^{-rate i}: bound on P(T >= k) for thresholds e^{rate i}."""
    return mean * math.exp(-rate * k) / -math.expm1(-rate)
