"""Monte Carlo estimates, truncated-mean divergence diagnostics and series for E X_T."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dists import Distribution
from .lastexit import ExceedanceSchedule, _log_suffix
from .parallel import pmap
from .streams import make_stream

Z = 3.0  # half-widths are 3 sigma throughout
CHUNK = 1_000_000
HEAVY_CUTOFF = 4.0


class DataError(ValueError):
    """Not enough usable observations."""


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    half_width: float
    n: int
    seed: int
    stream_id: int

    @property
    def interval(self) -> tuple[float, float]:
        return self.mean - self.half_width, self.mean + self.half_width

    def covers(self, x: float) -> bool:
        lo, hi = self.interval
        return lo <= x <= hi


class Moments:
    """Column-wise count, mean and centered sum of squares; chunks merge exactly in order."""

    def __init__(self, width: int = 1):
        self.n = 0
        self.mu = np.zeros(width)
        self.m2 = np.zeros(width)

    def add(self, y) -> "Moments":
        y = np.asarray(y, dtype=float)
        y = y.reshape(len(y), -1)
        if len(y) == 0:
            return self
        other = Moments(y.shape[1])
        other.n = len(y)
        other.mu = y.mean(axis=0)
        other.m2 = ((y - other.mu) ** 2).sum(axis=0)
        return self.merge(other)

    def merge(self, other: "Moments") -> "Moments":
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mu, self.m2 = other.n, other.mu.copy(), other.m2.copy()
            return self
        n = self.n + other.n
        delta = other.mu - self.mu
        self.mu = self.mu + delta * (other.n / n)
        self.m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        self.n = n
        return self

    def mean(self) -> np.ndarray:
        return self.mu

    def half_width(self) -> np.ndarray:
        var = self.m2 / max(self.n - 1, 1)
        return Z * np.sqrt(var / self.n)


def _chunks(n: int, size: int = CHUNK) -> list[int]:
    return [min(size, n - start) for start in range(0, n, size)]


def summarize(values, seed: int = 0, stream_id: int = 0) -> MCEstimate:
    """MCEstimate from an array of i.i.d. draws."""
    acc = Moments().add(np.asarray(values, dtype=float))
    return MCEstimate(float(acc.mean()[0]), float(acc.half_width()[0]), acc.n, seed, stream_id)


def _mean_task(sampler, seed, stream_id, chunk, m):
    return Moments().add(np.asarray(sampler(make_stream(seed, stream_id, chunk), m), dtype=float))


def mc_mean(sampler, n: int, seed: int, stream_id: int = 0, workers: int = 1) -> MCEstimate:
    """Sample mean of ``sampler(rng, m)`` draws with a 3-sigma CLT half-width.

    Draws are made in chunks of at most one million, chunk ``i`` from stream
    ``(seed, stream_id, i)``, so the estimate depends only on
    ``(seed, stream_id, n)`` and not on ``workers``.
    """
    if n < 100:
        raise ValueError("mc_mean needs n >= 100")
    parts = pmap(_mean_task, [(sampler, seed, stream_id, i, m) for i, m in enumerate(_chunks(n))], workers)
    acc = Moments()
    for part in parts:
        acc.merge(part)
    return MCEstimate(float(acc.mean()[0]), float(acc.half_width()[0]), n, seed, stream_id)


# ---------------------------------------------------------------------------
# truncated means
# ---------------------------------------------------------------------------
class Verdict(str, enum.Enum):
    CONVERGENT = "CONVERGENT"
    DIVERGENT = "DIVERGENT"
    INCONCLUSIVE = "INCONCLUSIVE"


CONVERGENT_INCREASE = 0.01
DIVERGENT_INCREASE = 0.10


@dataclass(frozen=True)
class DivergenceReport:
    """Truncated means E[Y ^ M] on a geometric grid, from common random numbers.

    ``slope`` is the least-squares slope of the mean against log10 M over the
    top three decades; its half-width comes from the per-draw linear
    functional defining it, so correlation across levels is accounted for.
    ``final_increase`` is the relative rise over the last decade.
    """

    levels: np.ndarray
    means: np.ndarray
    half_widths: np.ndarray
    slope: float
    slope_half_width: float
    final_increase: float
    final_increase_half_width: float
    n: int
    verdict: Verdict | None = None

    def with_verdict(self) -> "DivergenceReport":
        return DivergenceReport(**{**self.__dict__, "verdict": divergence_verdict(self)})


def _check_grid(levels) -> np.ndarray:
    M = np.asarray(levels, dtype=float)
    if M.ndim != 1 or len(M) < 4:
        raise ValueError("need at least 4 truncation levels")
    if np.any(M <= 0) or np.any(np.diff(M) <= 0):
        raise ValueError("levels must be positive and increasing")
    r = M[1:] / M[:-1]
    if not np.allclose(r, r[0], rtol=1e-9):
        raise ValueError("levels must form a geometric grid")
    return M


def geometric_levels(lo_exp: float, hi_exp: float, per_decade: int = 1) -> np.ndarray:
    """10^lo_exp .. 10^hi_exp with ``per_decade`` points per decade."""
    n = int(round((hi_exp - lo_exp) * per_decade)) + 1
    return 10.0 ** np.linspace(lo_exp, hi_exp, n)


def _slope_weights(M: np.ndarray) -> tuple[np.ndarray, int]:
    x = np.log10(M)
    top = x >= x[-1] - 3 - 1e-9
    xs = x[top]
    w = (xs - xs.mean()) / np.sum((xs - xs.mean()) ** 2)
    full = np.zeros(len(M))
    full[top] = w
    # the level one decade below the top (nearest on the grid)
    i_prev = int(np.argmin(np.abs(x - (x[-1] - 1))))
    return full, i_prev


def _curve_columns(y, M, w, i_prev) -> Moments:
    capped = np.minimum(np.asarray(y, dtype=float)[:, None], M[None, :])
    extra = np.column_stack([capped @ w, capped[:, -1] - capped[:, i_prev]])
    return Moments(len(M) + 2).add(np.hstack([capped, extra]))


def _curve_task(sampler, M, w, i_prev, seed, stream_id, chunk, m):
    return _curve_columns(sampler(make_stream(seed, stream_id, chunk), m), M, w, i_prev)


def truncated_mean_curve(
    source, levels, n: int | None = None, seed: int = 0, stream_id: int = 0, workers: int = 1
) -> DivergenceReport:
    """E[Y ^ M] for every level M from one set of draws (monotone in M by construction).

    ``source`` is either an array of draws or a callable ``sampler(rng, m)``;
    the latter is chunked exactly like ``mc_mean``.
    """
    M = _check_grid(levels)
    w, i_prev = _slope_weights(M)
    acc = Moments(len(M) + 2)
    if callable(source):
        if n is None:
            raise ValueError("n is required with a sampler")
        tasks = [(source, M, w, i_prev, seed, stream_id, i, m) for i, m in enumerate(_chunks(n))]
        for part in pmap(_curve_task, tasks, workers):
            acc.merge(part)
    else:
        y = np.asarray(source, dtype=float)
        for start in range(0, len(y), CHUNK):
            acc.merge(_curve_columns(y[start : start + CHUNK], M, w, i_prev))
    mean = acc.mean()
    hw = acc.half_width()
    k = len(M)
    # merging can break exact ties by round-off; restore monotonicity
    means = np.maximum.accumulate(mean[:k])
    base = means[i_prev]
    rise = max(float(mean[k + 1]), 0.0)
    rel = rise / base if base > 0 else 0.0
    rel_hw = hw[k + 1] / base if base > 0 else 0.0
    return DivergenceReport(M, means, hw[:k], float(mean[k]), float(hw[k]), float(rel), float(rel_hw), acc.n)


def divergence_verdict(report: DivergenceReport) -> Verdict:
    """CONVERGENT: last-decade rise < 1% and slope CI contains 0.
    DIVERGENT: slope CI excludes 0 and last-decade rise > 10%.
    Anything else is INCONCLUSIVE.
    """
    M = report.levels
    if M[-1] / M[0] < 1e3 * (1 - 1e-9):
        raise ValueError("verdict needs at least three decades of levels")
    # a flat curve has slope zero only up to round-off in the merged sums
    fuzz = 1e-9 * float(np.max(np.abs(report.means)))
    lo = report.slope - report.slope_half_width - fuzz
    hi = report.slope + report.slope_half_width + fuzz
    contains_zero = lo <= 0 <= hi
    if report.final_increase < CONVERGENT_INCREASE and contains_zero:
        return Verdict.CONVERGENT
    if not contains_zero and report.final_increase > DIVERGENT_INCREASE:
        return Verdict.DIVERGENT
    return Verdict.INCONCLUSIVE


# ---------------------------------------------------------------------------
# tail index
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class HillEstimate:
    alpha: float
    half_width: float
    k: int

    @property
    def heavy(self) -> bool:
        """False when the estimate lies beyond the heavy-tail range (index above 4)."""
        return self.alpha < HEAVY_CUTOFF


def hill_tail_index(samples, k: int) -> HillEstimate:
    """Hill estimator from the top ``k`` order statistics, CI 3 alpha / sqrt(k)."""
    x = np.asarray(samples, dtype=float)
    if k < 50:
        raise ValueError("Hill estimator needs k >= 50")
    if k > len(x) / 10:
        raise ValueError("Hill estimator needs k <= n/10")
    pos = x[x > 0]
    if len(pos) <= k:
        raise DataError(f"only {len(pos)} positive samples for k = {k}")
    top = np.partition(pos, len(pos) - k - 1)[len(pos) - k - 1 :]
    top.sort()
    logs = np.log(top)
    H = float(np.mean(logs[1:] - logs[0]))
    if H <= 0:
        raise DataError("top order statistics are tied; tail index undefined")
    alpha = 1.0 / H
    return HillEstimate(alpha, Z * alpha / math.sqrt(k), k)


# ---------------------------------------------------------------------------
# series for E X_T
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SeriesMeanXT:
    """Partial sums over k = 1..K of P(T=k) E[X | X in B_k], and of E[X; X in B_k].

    The second series bounds E S_T from below term by term.
    """

    k: np.ndarray
    partial_sums: np.ndarray
    lower_bound_sums: np.ndarray

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.lower_bound_sums, prepend=0.0)


def series_mean_XT(d: Distribution, sched: ExceedanceSchedule, K: int) -> SeriesMeanXT:
    """Semi-analytic partial sums for E X_T; needs closed-form set means."""
    if K < 1:
        raise ValueError("K must be positive")
    k = np.arange(1, K + 1)
    terms = np.array([sched.set_partial_mean(int(i)) for i in k])
    p = sched.probs(k)
    S = _log_suffix(p)
    r_lo, r_hi = sched.tail_sum_bounds(K)
    logQ = -(r_lo + r_hi) / 2
    # P(T = k) E[X | B_k] = prod_{j > k}(1 - p_j) E[X; B_k]
    weighted = np.exp(S[1:] + logQ) * terms
    return SeriesMeanXT(k, np.cumsum(weighted), np.cumsum(terms))
