"""Nonnegative laws with analytic tails, moments and exact inverse-transform samplers.

Every family exposes ``tail(x) = P(X >= x)`` and its generalized inverse
``isf(v) = sup{x : tail(x) >= v}``.  Drawing ``V`` uniform on ``(0, c]`` and
returning ``isf(V)`` gives an exact draw of ``X`` conditioned on
``tail(X)``-level sets, which is what the last-exit samplers rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, special

from .streams import RandomStream, uniform_open_left

INFINITE = math.inf

# ranges up to this many integers are summed term by term
DIRECT_SUM_LIMIT = 10_000
# continuous floor sums switch to Euler-Maclaurin above this index
_EM_START = 1_000


class ImpossibleConditioning(ValueError):
    """Raised when conditioning on an event of probability zero."""


@dataclass(frozen=True)
class ExtendedMoment:
    """A moment that may be infinite.

    ``error`` is an absolute bound on the truncation/quadrature error of a
    finite ``value``; it is zero for closed forms.
    """

    value: float
    method: str = "closed_form"
    error: float = 0.0

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def is_infinite(self) -> bool:
        return not self.finite

    def __float__(self) -> float:
        return float(self.value)


def _out(x_in, arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if np.ndim(x_in) == 0 else arr


def _check_nonneg(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("x must be nonnegative")
    return x


class Distribution:
    """Common surface of the nonnegative families."""

    continuous = False

    # -- analytic --------------------------------------------------------
    def _tail(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _isf(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def tail(self, x):
        """P(X >= x)."""
        xa = _check_nonneg(x)
        return _out(x, self._tail(xa))

    def log_tail(self, x):
        xa = _check_nonneg(x)
        with np.errstate(divide="ignore"):
            return _out(x, np.log(self._tail(xa)))

    def isf(self, v):
        """Largest x with tail(x) >= v, for v in (0, 1]."""
        va = np.asarray(v, dtype=float)
        if np.any(va <= 0) or np.any(va > 1):
            raise ValueError("v must lie in (0, 1]")
        return _out(v, self._isf(va))

    def quantile(self, u):
        """Generalized inverse of the cdf, u in (0, 1)."""
        ua = np.asarray(u, dtype=float)
        if np.any(ua <= 0) or np.any(ua >= 1) or np.any(np.isnan(ua)):
            raise ValueError("u must lie in (0, 1)")
        return _out(u, self._isf(1.0 - ua))

    def cdf(self, x):
        """P(X <= x); right-continuous version used for KS tests."""
        xa = np.asarray(x, dtype=float)
        return _out(x, 1.0 - self._tail(np.nextafter(np.maximum(xa, 0.0), np.inf)))

    def mass_between(self, lo, hi):
        """P(lo <= X < hi), vectorized; ``hi`` may be ``inf``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out = self._tail(lo) - self._tail(hi)
        return np.where(hi > lo, np.maximum(out, 0.0), 0.0)

    def floor_pmf(self, k):
        """P(floor(X) = k)."""
        ka = np.asarray(k)
        if np.any(ka < 0):
            raise ValueError("k must be nonnegative")
        ka = ka.astype(float)
        return _out(k, self.mass_between(ka, ka + 1.0))

    def partial_mean(self, lo, hi=math.inf) -> float:
        """E[X; lo <= X < hi]."""
        raise NotImplementedError

    def floor_power_sum(self, p: float, a: int, b) -> float:
        """sum_{a <= k < b} P(floor X = k) k^p (b may be ``math.inf``)."""
        raise NotImplementedError

    def moment(self, alpha: float) -> ExtendedMoment:
        raise NotImplementedError

    def xlogx_moment(self) -> ExtendedMoment:
        raise NotImplementedError

    @property
    def moment_index(self) -> tuple[float, bool]:
        """(sup{r: E X^r < inf}, whether the supremum itself is a finite moment)."""
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return self.moment(1.0).value

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- sampling --------------------------------------------------------
    def sample(self, rng: RandomStream, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be nonnegative")
        return self._isf(uniform_open_left(rng, n))

    def sample_conditional_tail(self, rng: RandomStream, c, size=None):
        """Draw(s) of X given X >= c, by restricting the uniform seed to (0, tail(c)]."""
        c_arr = np.asarray(c, dtype=float)
        t = self._tail(c_arr if size is None else np.broadcast_to(c_arr, size))
        if np.any(t <= 0):
            raise ImpossibleConditioning(f"P(X >= {c}) = 0")
        v = uniform_open_left(rng, np.shape(t)) * t
        x = np.maximum(self._isf(v), c_arr)
        return float(x) if size is None and np.ndim(c) == 0 else x

    def sample_conditional_floor(self, rng: RandomStream, ranges, size=None):
        """Draw X restricted to a union of floor intervals.

        ``ranges`` is an iterable of integer pairs ``(lo, hi)`` meaning floor
        values ``lo .. hi-1`` (``hi`` may be ``math.inf``); a bare integer ``j``
        means ``(j, j+1)``.  The floor value is chosen proportionally to the
        restricted floor pmf, then X is drawn within it by inverse transform.
        """
        pairs = []
        for r in ranges:
            if np.ndim(r) == 0:
                pairs.append((float(r), float(r) + 1.0))
            else:
                pairs.append((float(r[0]), float(r[1])))
        if not pairs:
            raise ImpossibleConditioning("empty floor restriction")
        lo = np.array([p[0] for p in pairs])
        hi = np.array([p[1] for p in pairs])
        w = self.mass_between(lo, hi)
        if not np.sum(w) > 0:
            raise ImpossibleConditioning("floor restriction has zero mass")
        m = 1 if size is None else int(size)
        idx = rng.choice(len(w), size=m, p=w / np.sum(w))
        x = self._draw_between(rng, lo[idx], hi[idx], w[idx])
        return float(x[0]) if size is None else x

    def _draw_between(self, rng, lo, hi, mass=None):
        """Vectorized exact draws of X | lo <= X < hi."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if mass is None:
            mass = self.mass_between(lo, hi)
        t_lo = self._tail(lo)
        v = t_lo - (1.0 - uniform_open_left(rng, lo.shape)) * mass
        v = np.clip(v, np.finfo(float).tiny, 1.0)
        x = self._isf(v)
        below_hi = np.nextafter(hi, -np.inf)
        return np.clip(x, lo, below_hi)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------
_GAUSS = np.polynomial.legendre.leggauss(40)


def _smooth_floor_sum(f, a: float, b: float, p: float = 1.0) -> float:
    """Euler-Maclaurin for sum_{a <= k < b} f(k), f smooth and slowly varying."""
    if not b > a:
        return 0.0
    fa = float(f(np.array([a]))[0])
    fb = 0.0 if math.isinf(b) else float(f(np.array([b]))[0])

    ua = math.log(a)
    ub = math.log(b) if math.isfinite(b) else max(ua + 1.0, 700.0 / max(p, 1.0))
    # Gauss-Legendre on unit pieces of log x; the integrand is smooth there
    edges = np.linspace(ua, ub, max(2, int(math.ceil(ub - ua)) + 1))
    nodes, weights = _GAUSS
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    u = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    x = np.exp(u)
    vals = (f(x) * x).reshape(len(mid), -1)
    total = math.fsum((vals @ weights) * half)

    def deriv(x):
        h = 1e-3 * x
        return (float(f(np.array([x + h]))[0]) - float(f(np.array([x - h]))[0])) / (2 * h)

    d_b = 0.0 if math.isinf(b) else deriv(b)
    return total + 0.5 * (fa - fb) + (d_b - deriv(a)) / 12.0


def _int_range(a, b):
    a = max(0, int(a))
    if math.isinf(b):
        return a, math.inf
    return a, int(b)


# ---------------------------------------------------------------------------
# continuous families
# ---------------------------------------------------------------------------
class _Continuous(Distribution):
    continuous = True

    def _smooth_start(self) -> float:
        return 0.0

    def _psi_power(self, p):
        def f(x):
            x = np.asarray(x, dtype=float)
            return self.mass_between(x, x + 1.0) * x**p

        return f

    def floor_power_sum(self, p: float, a: int, b) -> float:
        a, b = _int_range(a, b)
        if b <= a:
            return 0.0
        if math.isinf(b) and self.moment(p).is_infinite:
            return math.inf
        f = self._psi_power(p)
        if b - a <= DIRECT_SUM_LIMIT:
            ks = np.arange(a, int(b), dtype=float)
            return math.fsum(f(ks))
        switch = max(a, _EM_START, int(math.ceil(self._smooth_start())) + 1)
        total = 0.0
        stop = b if b <= switch else switch
        if stop > a:
            ks = np.arange(a, int(stop), dtype=float)
            total += math.fsum(f(ks))
        if b > switch:
            total += _smooth_floor_sum(f, float(switch), float(b), p)
        return total


@dataclass(frozen=True)
class Pareto(_Continuous):
    """Pareto law with tail (scale/x)^tail_index for x >= scale."""

    tail_index: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.tail_index > 0 and self.scale > 0):
            raise ValueError("Pareto needs tail_index > 0 and scale > 0")

    def _smooth_start(self):
        return self.scale

    @property
    def moment_index(self):
        return self.tail_index, False

    def _log_tail(self, x):
        with np.errstate(divide="ignore"):
            lx = np.log(np.maximum(x, self.scale))
        return self.tail_index * (math.log(self.scale) - lx)

    def _tail(self, x):
        return np.exp(self._log_tail(x))

    def log_tail(self, x):
        xa = _check_nonneg(x)
        return _out(x, self._log_tail(xa))

    def _isf(self, v):
        return self.scale * v ** (-1.0 / self.tail_index)

    def mass_between(self, lo, hi):
        lo = np.maximum(np.asarray(lo, dtype=float), self.scale)
        hi = np.maximum(np.asarray(hi, dtype=float), self.scale)
        with np.errstate(invalid="ignore", divide="ignore"):
            # log-ratio from the gap keeps precision when hi - lo << lo
            d = -self.tail_index * np.log1p((hi - lo) / lo)
            out = np.exp(self._log_tail(lo)) * -np.expm1(d)
        out = np.where(np.isinf(hi), np.exp(self._log_tail(lo)), out)
        return np.where(hi > lo, np.nan_to_num(out, nan=0.0), 0.0)

    def partial_mean(self, lo, hi=math.inf) -> float:
        a, xm = self.tail_index, self.scale
        lo = max(float(lo), xm)
        hi = float(hi)
        if hi <= lo:
            return 0.0
        if math.isinf(hi):
            if a <= 1:
                return math.inf
            return a * xm**a * lo ** (1 - a) / (a - 1)
        if a == 1:
            return xm * math.log(hi / lo)
        # a xm^a (lo^{1-a} - hi^{1-a}) / (a - 1), written to avoid cancellation
        lead = a * xm**a * lo ** (1 - a) / (a - 1)
        return lead * -math.expm1((1 - a) * math.log(hi / lo))

    def moment(self, alpha: float) -> ExtendedMoment:
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        a = self.tail_index
        if alpha >= a:
            return ExtendedMoment(INFINITE)
        return ExtendedMoment(a * self.scale**alpha / (a - alpha))

    def xlogx_moment(self) -> ExtendedMoment:
        a, xm = self.tail_index, self.scale
        if a <= 1:
            return ExtendedMoment(INFINITE)
        lo = max(xm, 1.0)
        val = a * xm**a * lo ** (1 - a) * (math.log(lo) / (a - 1) + 1 / (a - 1) ** 2)
        return ExtendedMoment(val)

    def to_dict(self):
        return {"family": "pareto", "tail_index": self.tail_index, "scale": self.scale}


@dataclass(frozen=True)
class Exponential(_Continuous):
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("Exponential needs rate > 0")

    def _tail(self, x):
        return np.exp(-self.rate * x)

    @property
    def moment_index(self):
        return math.inf, True

    def log_tail(self, x):
        xa = _check_nonneg(x)
        return _out(x, -self.rate * xa)

    def _isf(self, v):
        return -np.log(v) / self.rate

    def mass_between(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        with np.errstate(invalid="ignore"):
            out = np.exp(-self.rate * lo) * -np.expm1(-self.rate * (hi - lo))
        return np.where(hi > lo, np.nan_to_num(out, nan=0.0), 0.0)

    def partial_mean(self, lo, hi=math.inf) -> float:
        lam = self.rate
        lo = max(float(lo), 0.0)
        hi = float(hi)
        if hi <= lo:
            return 0.0
        upper = 0.0 if math.isinf(hi) else (hi + 1 / lam) * math.exp(-lam * hi)
        return (lo + 1 / lam) * math.exp(-lam * lo) - upper

    def moment(self, alpha: float) -> ExtendedMoment:
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        return ExtendedMoment(math.gamma(alpha + 1) / self.rate**alpha)

    def xlogx_moment(self) -> ExtendedMoment:
        lam = self.rate
        val, err = integrate.quad(
            lambda x: x * math.log(x) * lam * math.exp(-lam * x), 1.0, math.inf, epsabs=1e-14, epsrel=1e-12
        )
        return ExtendedMoment(val, "quadrature", err)

    def to_dict(self):
        return {"family": "exponential", "rate": self.rate}


# ---------------------------------------------------------------------------
# finitely supported families
# ---------------------------------------------------------------------------
class _Atoms(Distribution):
    """Law on finitely many atoms."""

    def _atoms(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def moment_index(self):
        return math.inf, True

    def _tail(self, x):
        vals, probs = self._atoms()
        x = np.asarray(x, dtype=float)
        return np.sum(np.where(vals[:, None] >= x.ravel()[None, :], probs[:, None], 0.0), axis=0).reshape(x.shape)

    def _isf(self, v):
        vals, probs = self._atoms()
        # tail at each atom, vals ascending
        tails = np.cumsum(probs[::-1])[::-1]
        v = np.asarray(v, dtype=float)
        idx = np.searchsorted(-tails, -v, side="right") - 1
        return vals[np.clip(idx, 0, len(vals) - 1)]

    def partial_mean(self, lo, hi=math.inf) -> float:
        vals, probs = self._atoms()
        sel = (vals >= lo) & (vals < hi)
        return float(np.sum(vals[sel] * probs[sel]))

    def floor_power_sum(self, p, a, b) -> float:
        vals, probs = self._atoms()
        k = np.floor(vals)
        sel = (k >= a) & (k < b)
        return float(np.sum(probs[sel] * k[sel] ** p))

    def moment(self, alpha: float) -> ExtendedMoment:
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        vals, probs = self._atoms()
        return ExtendedMoment(float(np.sum(probs * np.power(vals, alpha))))

    def xlogx_moment(self) -> ExtendedMoment:
        vals, probs = self._atoms()
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(vals > 1, vals * np.log(np.where(vals > 1, vals, 1.0)), 0.0)
        return ExtendedMoment(float(np.sum(probs * terms)))


@dataclass(frozen=True)
class Bernoulli(_Atoms):
    p: float

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError("Bernoulli needs p in [0, 1]")

    def _atoms(self):
        return np.array([0.0, 1.0]), np.array([1.0 - self.p, self.p])

    def to_dict(self):
        return {"family": "bernoulli", "p": self.p}


@dataclass(frozen=True)
class PointMass(_Atoms):
    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("PointMass needs value >= 0")

    def _atoms(self):
        return np.array([float(self.value)]), np.array([1.0])

    def to_dict(self):
        return {"family": "point_mass", "value": self.value}


# ---------------------------------------------------------------------------
# DiscreteLogTail: P(X = 2^j) = C / (j^2 2^j), j >= 1
# ---------------------------------------------------------------------------
_LOG_TAIL_JMAX = 1000  # 2^1000 is near the top of the float range


@lru_cache(maxsize=None)
def _log_tail_constant() -> float:
    # sum 1/(j^2 2^j); the neglected tail after J terms is below 2^{-J}/J^2 * 2
    terms = [1.0 / (j * j * 2.0**j) for j in range(1, 60)]
    return 1.0 / math.fsum(terms)


@lru_cache(maxsize=None)
def _log_tail_table() -> tuple[np.ndarray, np.ndarray]:
    """(log P(X = 2^j), log P(X >= 2^j)) for j = 1 .. JMAX."""
    C = _log_tail_constant()
    j = np.arange(1, _LOG_TAIL_JMAX + 1, dtype=float)
    logp = math.log(C) - j * math.log(2.0) - 2 * np.log(j)
    m = np.arange(0, 80, dtype=float)
    ratio = np.sum(2.0 ** (-m)[None, :] * (j[:, None] / (j[:, None] + m[None, :])) ** 2, axis=1)
    logt = logp + np.log(ratio)
    logt[0] = 0.0
    return logp, logt


@dataclass(frozen=True)
class DiscreteLogTail(Distribution):
    """Atoms 2^j with mass proportional to 1/(j^2 2^j): finite mean, E[X log X] infinite."""

    @property
    def normalizer(self) -> float:
        return _log_tail_constant()

    @property
    def moment_index(self):
        return 1.0, True

    def _jindex(self, x):
        # smallest j >= 1 with 2^j >= x
        x = np.minimum(np.asarray(x, dtype=float), 2.0 ** (_LOG_TAIL_JMAX + 1))
        with np.errstate(divide="ignore"):
            j = np.ceil(np.log2(np.maximum(x, 2.0)))
        j = np.where(np.ldexp(1.0, (j - 1).astype(int)) >= x, j - 1, j)
        # log2 can round down to an integer just above a power of two
        j = np.where(np.ldexp(1.0, j.astype(int)) < x, j + 1, j)
        return np.maximum(j, 1).astype(int)

    def _tail(self, x):
        _, logt = _log_tail_table()
        j = self._jindex(x)
        out = np.where(j <= _LOG_TAIL_JMAX, np.exp(logt[np.clip(j, 1, _LOG_TAIL_JMAX) - 1]), 0.0)
        return out

    def _isf(self, v):
        _, logt = _log_tail_table()
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            lv = np.log(v)
        idx = np.searchsorted(-logt, -lv, side="right") - 1
        j = np.clip(idx, 0, _LOG_TAIL_JMAX - 1) + 1
        return np.ldexp(1.0, j)

    def partial_mean(self, lo, hi=math.inf) -> float:
        logp, _ = _log_tail_table()
        j = np.arange(1, _LOG_TAIL_JMAX + 1)
        x = np.ldexp(1.0, j)
        sel = (x >= lo) & (x < hi)
        if math.isinf(hi):
            # sum_{j >= j0} C/j^2 over all j (not only the tabulated ones)
            j0 = int(self._jindex(lo))
            return self.normalizer * float(mpmath.zeta(2, j0))
        return float(np.sum(np.exp(logp[sel] + j[sel] * math.log(2.0))))

    def floor_power_sum(self, p, a, b) -> float:
        logp, _ = _log_tail_table()
        j = np.arange(1, _LOG_TAIL_JMAX + 1)
        x = np.ldexp(1.0, j)
        sel = (x >= a) & (x < b)
        if math.isinf(b) and p >= 1:
            return math.inf
        return float(np.sum(np.exp(logp[sel] + p * j[sel] * math.log(2.0))))

    def moment(self, alpha: float) -> ExtendedMoment:
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        C = self.normalizer
        if alpha > 1:
            return ExtendedMoment(INFINITE)
        if alpha == 1:
            return ExtendedMoment(C * math.pi**2 / 6)
        r = 2.0 ** (alpha - 1)
        J = 1
        total = 0.0
        while True:
            total += r**J / J**2
            # remaining terms are each below r^J / J^2 and decay geometrically
            bound = r ** (J + 1) / (J + 1) ** 2 / (1 - r)
            if bound <= 1e-12 * total:
                break
            J += 1
        return ExtendedMoment(C * total, "series", C * bound)

    def xlogx_moment(self) -> ExtendedMoment:
        return ExtendedMoment(INFINITE)

    def to_dict(self):
        return {"family": "discrete_log_tail"}


# ---------------------------------------------------------------------------
# DiscretePowerTail: P(X = k) = k^{-beta} / zeta(beta), k >= 1
# ---------------------------------------------------------------------------
_POWER_TABLE = 1_000_000


def _power_sum(s: float, a: int, b) -> float:
    """sum_{a <= k < b} k^{-s}, a >= 1."""
    a = max(int(a), 1)
    if not math.isinf(b) and int(b) <= a:
        return 0.0
    if not math.isinf(b) and int(b) - a <= DIRECT_SUM_LIMIT:
        k = np.arange(a, int(b), dtype=float)
        return math.fsum(k ** (-s))
    if s == 1:
        if math.isinf(b):
            return math.inf
        return float(special.digamma(float(b)) - special.digamma(float(a)))
    if s > 1:
        hi = 0.0 if math.isinf(b) else float(special.zeta(s, float(b)))
        return float(special.zeta(s, float(a))) - hi
    if math.isinf(b):
        return math.inf
    with mpmath.workdps(40):
        return float(mpmath.zeta(s, a) - mpmath.zeta(s, int(b)))


def _hurwitz_large(s: float, q: np.ndarray) -> np.ndarray:
    """zeta(s, q) for q >= 1e6 by Euler-Maclaurin; relative error below 1e-30."""
    q = np.asarray(q, dtype=float)
    lq = np.log(q)
    lead = np.exp((1 - s) * lq) / (s - 1)
    inv = 1.0 / q
    corr = (
        0.5 * (s - 1) * inv
        + (s - 1) * s / 12.0 * inv**2
        - (s - 1) * s * (s + 1) * (s + 2) / 720.0 * inv**4
        + (s - 1) * s * (s + 1) * (s + 2) * (s + 3) * (s + 4) / 30240.0 * inv**6
    )
    return lead * (1.0 + corr)


@lru_cache(maxsize=None)
def _power_tail_table(beta: float) -> np.ndarray:
    """tail(k) for k = 1 .. _POWER_TABLE + 1 (index k-1)."""
    z = special.zeta(beta, 1.0)
    k = np.arange(1, _POWER_TABLE + 2, dtype=float)
    pk = k ** (-beta) / z
    rest = special.zeta(beta, float(_POWER_TABLE + 2)) / z
    out = np.minimum(np.cumsum(pk[::-1])[::-1] + rest, 1.0)
    out[0] = 1.0  # tail(1) = 1 exactly; the summed series overshoots by an ulp
    return out


@dataclass(frozen=True)
class DiscretePowerTail(Distribution):
    """P(X = k) proportional to k^{-exponent} on k = 1, 2, ..."""

    exponent: float

    def __post_init__(self):
        if not self.exponent > 1:
            raise ValueError("DiscretePowerTail needs exponent > 1")

    @property
    def zeta(self) -> float:
        return float(special.zeta(self.exponent, 1.0))

    @property
    def moment_index(self):
        return self.exponent - 1.0, False

    def _tail_int(self, k):
        # tail at integer k >= 1
        k = np.asarray(k, dtype=float)
        table = _power_tail_table(self.exponent)
        small = k <= _POWER_TABLE + 1
        out = np.empty(k.shape)
        out[small] = table[(k[small] - 1).astype(np.int64)]
        if np.any(~small):
            out[~small] = _hurwitz_large(self.exponent, k[~small]) / self.zeta
        return out

    def _tail(self, x):
        x = np.asarray(x, dtype=float)
        k = np.maximum(np.ceil(x), 1.0)
        return np.where(np.isinf(x), 0.0, self._tail_int(np.where(np.isinf(k), 1.0, k)))

    def _isf(self, v):
        shape = np.shape(v)
        v = np.atleast_1d(np.asarray(v, dtype=float))
        table = _power_tail_table(self.exponent)
        # largest k with tail(k) >= v; table is decreasing in k
        idx = np.searchsorted(-table, -v, side="right")
        out = idx.astype(float)
        deep = idx >= len(table)
        if np.any(deep):
            out[deep] = self._isf_deep(v[deep])
        return out.reshape(shape)

    def _isf_deep(self, v):
        b, z = self.exponent, self.zeta
        guess = ((b - 1) * z * v) ** (-1.0 / (b - 1))
        lo = np.maximum(np.floor(guess / 2) - 2, 1.0)
        hi = np.ceil(guess * 2) + 2
        for _ in range(80):
            if np.all(hi - lo <= np.maximum(1.0, lo * 2**-50)):
                break
            mid = np.floor((lo + hi) / 2)
            ok = special.zeta(b, mid) / z >= v
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        return lo

    def partial_mean(self, lo, hi=math.inf) -> float:
        a = max(int(math.ceil(lo)), 1)
        b = math.inf if math.isinf(hi) else int(math.ceil(hi))
        return _power_sum(self.exponent - 1, a, b) / self.zeta

    def floor_power_sum(self, p, a, b) -> float:
        a = max(int(a), 1)
        return _power_sum(self.exponent - p, a, b) / self.zeta

    def moment(self, alpha: float) -> ExtendedMoment:
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        if alpha >= self.exponent - 1:
            return ExtendedMoment(INFINITE)
        return ExtendedMoment(float(special.zeta(self.exponent - alpha, 1.0)) / self.zeta)

    def xlogx_moment(self) -> ExtendedMoment:
        if self.exponent <= 2:
            return ExtendedMoment(INFINITE)
        with mpmath.workdps(30):
            val = -mpmath.zeta(self.exponent - 1, 1, 1) / mpmath.zeta(self.exponent)
        return ExtendedMoment(float(val))

    def to_dict(self):
        return {"family": "discrete_power_tail", "exponent": self.exponent}


_FAMILIES = {
    "pareto": Pareto,
    "exponential": Exponential,
    "bernoulli": Bernoulli,
    "point_mass": PointMass,
    "discrete_log_tail": DiscreteLogTail,
    "discrete_power_tail": DiscretePowerTail,
}


def from_dict(spec: dict) -> Distribution:
    """Inverse of ``Distribution.to_dict``."""
    spec = dict(spec)
    family = spec.pop("family", None)
    if family not in _FAMILIES:
        raise ValueError(f"unknown distribution family {family!r}")
    try:
        return _FAMILIES[family](**spec)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family}: {exc}") from None


# thin functional aliases -----------------------------------------------------
def tail(d: Distribution, x):
    return d.tail(x)


def quantile(d: Distribution, u):
    return d.quantile(u)


def moment(d: Distribution, alpha: float) -> ExtendedMoment:
    return d.moment(alpha)


def xlogx_moment(d: Distribution) -> ExtendedMoment:
    return d.xlogx_moment()


def floor_pmf(d: Distribution, k):
    return d.floor_pmf(k)


def sample(d: Distribution, rng: RandomStream, n: int) -> np.ndarray:
    return d.sample(rng, n)


def sample_conditional_tail(d: Distribution, rng: RandomStream, c):
    return d.sample_conditional_tail(rng, c)


def sample_conditional_floor(d: Distribution, rng: RandomStream, ranges):
    return d.sample_conditional_floor(rng, ranges)
