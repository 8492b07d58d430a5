"""Lifetime distributions, censored samples, likelihoods and Fisher determinants.

Every likelihood exists in two forms: an ``*_arrays`` function that works on
an ``(R, n)`` block of replicate datasets with length-``R`` parameter vectors
(used by the estimators and the Monte Carlo harness), and a per-sample
wrapper taking a :class:`Sample` and a parameter dataclass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import mpmath
import numpy as np

from .errors import DomainError, FisherPrecisionError, SampleError
from .specfun import (
    lower_incomplete_gamma_order_derivs,
    std_normal_cdf,
    std_normal_logsf,
)

LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class WeibullParams:
    k: float
    lam: float

    def __post_init__(self):
        if not (self.k > 0 and self.lam > 0):
            raise DomainError(f"Weibull needs k > 0 and lambda > 0, got {self}")


@dataclass(frozen=True)
class LognormalParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.sigma > 0):
            raise DomainError(f"lognormal needs finite mu and sigma > 0, got {self}")


@dataclass(frozen=True)
class RandomCensorParams:
    """Weibull lifetimes (shape theta, scale beta) censored by Weibull (theta, alpha)."""

    theta: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.theta > 0 and self.alpha > 0 and self.beta > 0):
            raise DomainError(f"random-censoring parameters must be positive, got {self}")


@dataclass(frozen=True)
class ReducedCensorParams:
    """Binomial probability of an uncensored item plus Weibull law of ``Y``."""

    phi: float
    k: float
    lam: float

    def __post_init__(self):
        if not 0 < self.phi < 1:
            raise DomainError(f"phi must lie in (0, 1), got {self.phi}")
        if not (self.k > 0 and self.lam > 0):
            raise DomainError(f"k and lambda must be positive, got {self}")


# ---------------------------------------------------------------------------
# censoring schemes and samples


@dataclass(frozen=True)
class Complete:
    name = "complete"


@dataclass(frozen=True)
class TypeI:
    c: float
    name = "type1"

    def __post_init__(self):
        if not self.c > 0:
            raise SampleError(f"type I censoring time must be positive, got {self.c}")


@dataclass(frozen=True)
class TypeII:
    m: int
    name = "type2"

    def __post_init__(self):
        if self.m < 1:
            raise SampleError(f"type II needs m >= 1, got {self.m}")


@dataclass(frozen=True)
class RandomWeibull:
    name = "random"


Scheme = Union[Complete, TypeI, TypeII, RandomWeibull]


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Sample:
    """Observed times ``y`` with indicators ``delta`` (1 = failure observed).

    Construction validates the sample against its scheme and raises
    :class:`SampleError` on any violation; nothing is silently corrected.
    """

    y: np.ndarray
    delta: np.ndarray
    scheme: Scheme = field(default_factory=Complete)

    def __post_init__(self):
        y = _readonly(self.y)
        delta = np.array(self.delta)
        if y.ndim != 1 or delta.ndim != 1 or len(y) != len(delta):
            raise SampleError("y and delta must be 1-D and of equal length")
        if len(y) == 0:
            raise SampleError("empty sample")
        if not np.all(np.isfinite(y) & (y > 0)):
            raise SampleError("all observed times must be positive and finite")
        if not np.all((delta == 0) | (delta == 1)):
            raise SampleError("delta entries must be 0 or 1")
        delta = delta.astype(np.int8)
        delta.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "delta", delta)
        self._check_scheme()

    def _check_scheme(self):
        s, y, d = self.scheme, self.y, self.delta
        if isinstance(s, Complete):
            if not np.all(d == 1):
                raise SampleError("complete sample must have every delta = 1")
        elif isinstance(s, TypeI):
            bad = np.flatnonzero((d == 0) & (y != s.c))
            if bad.size:
                raise SampleError(
                    f"type I censored row {bad[0]} has y={y[bad[0]]!r}, expected c={s.c!r}"
                )
            bad = np.flatnonzero((d == 1) & (y > s.c))
            if bad.size:
                raise SampleError(f"type I failure row {bad[0]} exceeds c={s.c!r}")
        elif isinstance(s, TypeII):
            if s.m > len(y):
                raise SampleError(f"type II m={s.m} exceeds n={len(y)}")
            if int(d.sum()) != s.m:
                raise SampleError(f"type II sample must have exactly m={s.m} failures")
            if s.m < len(y):
                ym = y[d == 1].max()
                if not np.all(y[d == 0] == ym):
                    raise SampleError("type II censored rows must carry the m-th failure time")
        elif not isinstance(s, RandomWeibull):
            raise SampleError(f"unknown censoring scheme {s!r}")

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.delta, other.delta)
        )

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return int(self.delta.sum())

    def stats(self) -> "DerivedStats":
        return DerivedStats(self)

    def scaled(self, s: float) -> "Sample":
        """Same sample with every time (and a type I censoring time) times ``s``."""
        scheme = TypeI(self.scheme.c * s) if isinstance(self.scheme, TypeI) else self.scheme
        return Sample(self.y * s, self.delta, scheme)


class DerivedStats:
    """Cached sufficient statistics of a sample."""

    def __init__(self, sample: Sample):
        self.n = sample.n
        self.d = sample.d
        self._log_y = np.log(sample.y)
        self.sum_log_y_uncensored = float(self._log_y[sample.delta == 1].sum())
        self._pow_cache: dict[float, float] = {}

    def sum_y_pow_k(self, k: float) -> float:
        if k not in self._pow_cache:
            self._pow_cache[k] = float(np.exp(k * self._log_y).sum())
        return self._pow_cache[k]


# ---------------------------------------------------------------------------
# Weibull density, sampling, likelihoods


def weibull_pdf_cdf(t: float, p: WeibullParams) -> tuple[float, float]:
    if not t > 0:
        raise DomainError(f"Weibull density needs t > 0, got {t}")
    z = (t / p.lam) ** p.k
    pdf = p.k / p.lam * (t / p.lam) ** (p.k - 1) * math.exp(-z)
    return pdf, -math.expm1(-z)


def weibull_quantile(u, p: WeibullParams):
    """Inverse-CDF transform ``lam * (-log u)^(1/k)``; ``u`` plays 1 - F."""
    return p.lam * (-np.log(u)) ** (1.0 / p.k)


def _uniforms(rng: np.random.Generator, size) -> np.ndarray:
    u = rng.random(size)
    # random() is on [0, 1); a zero would map to an infinite lifetime.
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)


def sample_weibull(p: WeibullParams, n: int, seed) -> np.ndarray:
    """``n`` Weibull lifetimes by inverse CDF; identical for identical ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return weibull_quantile(_uniforms(np.random.default_rng(seed), n), p)


def sample_lognormal(p: LognormalParams, n: int, seed) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return np.exp(p.mu + p.sigma * rng.standard_normal(n))


def censor_type1(t, c: float) -> Sample:
    t = np.asarray(t, dtype=float)
    delta = (t <= c).astype(np.int8)
    return Sample(np.where(delta == 1, t, c), delta, TypeI(c))


def censor_type2(t, m: int) -> Sample:
    """Stop after the ``m``-th failure; survivors carry that failure time."""
    t = np.asarray(t, dtype=float)
    if not 1 <= m <= len(t):
        raise SampleError(f"need 1 <= m <= n, got m={m}")
    order = np.argsort(t, kind="stable")
    delta = np.zeros(len(t), dtype=np.int8)
    delta[order[:m]] = 1
    tm = t[order[m - 1]]
    return Sample(np.where(delta == 1, t, tm), delta, TypeII(m))


def sample_random_censoring(p: RandomCensorParams, n: int, seed) -> Sample:
    rng = np.random.default_rng(seed)
    t = weibull_quantile(_uniforms(rng, n), WeibullParams(p.theta, p.beta))
    c = weibull_quantile(_uniforms(rng, n), WeibullParams(p.theta, p.alpha))
    delta = (t <= c).astype(np.int8)
    return Sample(np.minimum(t, c), delta, RandomWeibull())


def weibull_nll_arrays(log_y, delta, k, lam):
    """Censored Weibull negative log-likelihood for a block of replicates.

    ``log_y`` and ``delta`` are ``(R, n)``; ``k`` and ``lam`` are length ``R``.
    With every ``delta = 1`` this is the complete-data likelihood.
    """
    k = np.asarray(k, dtype=float)
    log_lam = np.log(lam)
    d = delta.sum(axis=-1)
    kk = k[..., None]
    with np.errstate(over="ignore"):
        power = np.exp(kk * (log_y - log_lam[..., None])).sum(axis=-1)
    return (
        d * (k * log_lam - np.log(k))
        - (k - 1) * (delta * log_y).sum(axis=-1)
        + power
    )


def _check_weibull(p: WeibullParams):
    if not (p.k > 0 and p.lam > 0):
        raise DomainError(f"nonpositive Weibull parameters {p}")


def nll_weibull(sample: Sample, p: WeibullParams) -> float:
    """Negative log-likelihood in nats; censored rows contribute ``log S(y)``."""
    _check_weibull(p)
    ly = np.log(sample.y)[None, :]
    dl = sample.delta[None, :].astype(float)
    return float(weibull_nll_arrays(ly, dl, np.array([p.k]), np.array([p.lam]))[0])


def reduce_params(p: RandomCensorParams) -> ReducedCensorParams:
    # phi = alpha^t / (alpha^t + beta^t) = 1 / (1 + (beta/alpha)^t), in log space.
    r = p.theta * (math.log(p.beta) - math.log(p.alpha))
    phi = math.exp(-np.logaddexp(0.0, r))
    lam = p.beta * math.exp(-np.logaddexp(0.0, r) / p.theta)
    return ReducedCensorParams(phi=phi, k=p.theta, lam=lam)


def lift_params(r: ReducedCensorParams) -> RandomCensorParams:
    theta = r.k
    alpha = r.lam * math.exp(-math.log1p(-r.phi) / theta)
    beta = r.lam * math.exp(-math.log(r.phi) / theta)
    return RandomCensorParams(theta=theta, alpha=alpha, beta=beta)


def nll_binomial(delta, phi: float) -> float:
    """``-log`` of the Bernoulli likelihood of the indicator sequence."""
    if not 0 < phi < 1:
        raise DomainError(f"phi must lie in (0, 1), got {phi}")
    delta = np.asarray(delta)
    d = int(delta.sum())
    return -(d * math.log(phi) + (len(delta) - d) * math.log1p(-phi))


def nll_random_censoring(sample: Sample, p: RandomCensorParams) -> float:
    """Joint ``-log p(y, delta)`` with Weibull lifetimes and Weibull censoring."""
    if not isinstance(sample.scheme, RandomWeibull):
        raise SampleError("nll_random_censoring needs a RandomWeibull sample")
    th, a, b = p.theta, p.alpha, p.beta
    n, d = sample.n, sample.d
    ly = np.log(sample.y)
    rate = np.exp(th * (ly - math.log(a))).sum() + np.exp(th * (ly - math.log(b))).sum()
    return float(
        -n * math.log(th)
        + n * th * math.log(a)
        - d * th * (math.log(a) - math.log(b))
        - (th - 1) * ly.sum()
        + rate
    )


# ---------------------------------------------------------------------------
# Weibull Fisher information


def fisher_det_weibull_complete(n: int, p: WeibullParams) -> float:
    return n * n * math.pi**2 / (6 * p.lam**2)


def weibull_type1_fisher_factor(z_c):
    """``gamma2 * p - gamma1^2`` at ``z_c = (c/lam)^k``; vectorised.

    The Fisher determinant under type I censoring is ``(n/lam)^2`` times this.
    """
    _, g1, g2 = lower_incomplete_gamma_order_derivs(z_c)
    prob = -np.expm1(-np.asarray(z_c, dtype=float))
    return g2 * prob - g1 * g1


@lru_cache(maxsize=4096)
def _type1_factor_cached(z_rounded: float) -> float:
    return float(weibull_type1_fisher_factor(z_rounded))


def fisher_det_weibull_type1(n: int, c: float, p: WeibullParams) -> float:
    """Determinant of the expected Fisher information under type I censoring at ``c``.

    Tends to the complete-data value as ``c`` grows and to 0 as ``c -> 0``.
    """
    if not c > 0:
        raise DomainError(f"censoring time must be positive, got {c}")
    z_c = (c / p.lam) ** p.k
    if z_c == 0:
        return 0.0
    # Optimisers revisit nearby points; key on z_c to 14 significant digits.
    factor = _type1_factor_cached(float(f"{z_c:.14e}"))
    return (n / p.lam) ** 2 * factor


@lru_cache(maxsize=1024)
def type2_phi_sums(n: int, m: int) -> tuple[float, float]:
    """The alternating sums ``phi_1, phi_2`` in the type II Fisher determinant.

    ``phi_j = (1/m) sum_i (-1)^(m-i) C(n, i-1) C(n-i-1, m-i) log(n+1-i)^j``.
    The terms grow like ``2^n`` while the sum stays O(1), so binomials are
    exact integers and the sum is carried at a working precision sized to
    the largest term.
    """
    if not 1 <= m <= n:
        raise DomainError(f"type II needs 1 <= m <= n, got n={n}, m={m}")
    if m == n:
        return 0.0, 0.0
    coefs = [
        (-1) ** (m - i) * math.comb(n, i - 1) * math.comb(n - i - 1, m - i)
        for i in range(1, m + 1)
    ]
    digits = len(str(max(abs(c) for c in coefs)))
    with mpmath.workdps(digits + 30):
        logs = [mpmath.log(n + 1 - i) for i in range(1, m + 1)]
        phi1 = mpmath.fsum(c * lg for c, lg in zip(coefs, logs)) / m
        phi2 = mpmath.fsum(c * lg * lg for c, lg in zip(coefs, logs)) / m
        out = float(phi1), float(phi2)
    if not all(math.isfinite(v) for v in out):
        raise FisherPrecisionError(f"type II phi sums for n={n}, m={m} are not finite")
    return out


def fisher_det_weibull_type2(n: int, m: int, p: WeibullParams) -> float:
    phi1, phi2 = type2_phi_sums(n, m)
    return m * m * (math.pi**2 - 6 * phi1**2 + 6 * phi2) / (6 * p.lam**2)


# ---------------------------------------------------------------------------
# lognormal


def lognormal_nll_arrays(log_y, delta, mu, sigma, log_c=None):
    """Lognormal negative log-likelihood for a block; ``log_c`` enables type I."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    d = delta.sum(axis=-1)
    resid = (log_y - mu[..., None]) * delta
    out = (
        d * np.log(sigma)
        + 0.5 * d * LOG_2PI
        + (delta * log_y).sum(axis=-1)
        + (resid * resid).sum(axis=-1) / (2 * sigma**2)
    )
    if log_c is not None:
        n = log_y.shape[-1]
        z = (log_c - mu) / sigma
        out = out - (n - d) * std_normal_logsf(z)
    return out


def nll_lognormal(sample: Sample, p: LognormalParams) -> float:
    if not p.sigma > 0:
        raise DomainError(f"sigma must be positive, got {p.sigma}")
    s = sample.scheme
    if isinstance(s, Complete):
        log_c = None
    elif isinstance(s, TypeI):
        log_c = math.log(s.c)
    else:
        raise SampleError(f"lognormal likelihood supports complete or type I data, not {s!r}")
    ly = np.log(sample.y)[None, :]
    dl = sample.delta[None, :].astype(float)
    return float(
        lognormal_nll_arrays(ly, dl, np.array([p.mu]), np.array([p.sigma]), log_c)[0]
    )


def lognormal_type1_fisher_bracket(z):
    """Censoring correction factor multiplying ``2 n^2 / sigma^4``; vectorised.

    ``z = (log c - mu) / sigma``.  The ratio ``phi(z) / (1 - Phi(z))`` is formed
    in log space so the factor stays finite (and tends to 1) as ``z`` grows.
    """
    M = np.asarray(z, dtype=float)
    p = std_normal_cdf(M)
    log_pdf = -0.5 * M * M - 0.5 * LOG_2PI
    pdf = np.exp(log_pdf)
    mills = np.exp(log_pdf - std_normal_logsf(M))  # phi / (1 - p)
    t1 = -pdf * mills * (M * M * (1 - 2 * p) - 3 * p + 1) / 2
    t2 = pdf * pdf * mills * M / 2
    t3 = -pdf * M * (M * M + 3) * p / 2
    return t1 + t2 + t3 + p * p


def lognormal_type1_fisher_matrix(n: int, p: LognormalParams, c: float) -> np.ndarray:
    """Expected Fisher information in ``(mu, sigma)`` under type I censoring."""
    M = (math.log(c) - p.mu) / p.sigma
    prob = float(std_normal_cdf(M))
    log_pdf = -0.5 * M * M - 0.5 * LOG_2PI
    pdf = math.exp(log_pdf)
    mills = math.exp(log_pdf - float(std_normal_logsf(M)))
    a = pdf * mills - M * pdf + prob
    b = M * pdf * mills - pdf * (M * M + 1)
    e = M * M * pdf * mills - pdf * (M**3 + M) + 2 * prob
    return n / p.sigma**2 * np.array([[a, b], [b, e]])


def fisher_det_lognormal(n: int, p: LognormalParams, c: float | None = None) -> float:
    complete = 2.0 * n * n / p.sigma**4
    if c is None:
        return complete
    if not c > 0:
        raise DomainError(f"censoring time must be positive, got {c}")
    z = (math.log(c) - p.mu) / p.sigma
    return complete * float(lognormal_type1_fisher_bracket(z))
