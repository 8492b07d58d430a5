"""MML87 message lengths (in nats) for Weibull and lognormal lifetime models.

A message length is split into the *assertion* (prior, Fisher determinant
and lattice-quantisation terms) and the *detail* (``p/2`` plus the negative
log-likelihood).  The ``*_arrays`` variants evaluate whole batches of
replicates and back the estimators' objective functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, NonpositiveFisher, UnsupportedCombination
from .models import (
    LOG_2PI,
    Complete,
    LognormalParams,
    RandomWeibull,
    ReducedCensorParams,
    Sample,
    TypeI,
    TypeII,
    WeibullParams,
    lognormal_nll_arrays,
    lognormal_type1_fisher_bracket,
    type2_phi_sums,
    weibull_nll_arrays,
    weibull_type1_fisher_factor,
)
from .specfun import EULER_GAMMA

LOG_PI = math.log(math.pi)
LOG_HALF_CAUCHY_NORM = math.log(math.pi / 2)


class Model(str, Enum):
    WEIBULL = "weibull"
    LOGNORMAL = "lognormal"


class PriorKind(str, Enum):
    HALF_CAUCHY = "half-cauchy"        # Weibull: half-Cauchy(0,1) on k and lambda
    YANG_XIE = "yang-xie"              # improper: pi(k) ~ 1/k^2, pi(lambda) ~ 1/lambda
    LOGNORMAL_PAIR = "lognormal-pair"  # Cauchy(0,1) on mu, half-Cauchy(0,1) on sigma
    BINOMIAL_UNIFORM = "binomial-uniform"


@dataclass(frozen=True)
class PriorSpec:
    kind: PriorKind = PriorKind.HALF_CAUCHY

    @property
    def proper(self) -> bool:
        # The Yang-Xie prior only normalises once k and lambda are bounded.
        return self.kind is not PriorKind.YANG_XIE


HALF_CAUCHY = PriorSpec(PriorKind.HALF_CAUCHY)
YANG_XIE = PriorSpec(PriorKind.YANG_XIE)
LOGNORMAL_PAIR = PriorSpec(PriorKind.LOGNORMAL_PAIR)
BINOMIAL_UNIFORM = PriorSpec(PriorKind.BINOMIAL_UNIFORM)


@dataclass(frozen=True)
class Codelength:
    assertion: float
    detail: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.assertion + self.detail)

    def __add__(self, other: "Codelength") -> "Codelength":
        return Codelength(self.assertion + other.assertion, self.detail + other.detail)


def quantization_constant(p: int) -> float:
    """Normalised second moment of the optimal ``p``-dimensional lattice quantiser.

    Exact for ``p <= 3``; for larger ``p`` the value implied by
    ``(p/2)(log k_p + 1) = -(p/2) log 2pi + (1/2) log(p pi) - gamma``.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 1:
        return 1 / 12
    if p == 2:
        return 5 / (36 * math.sqrt(3))
    if p == 3:
        return 19 / (192 * 2 ** (1 / 3))
    rhs = -(p / 2) * LOG_2PI + 0.5 * math.log(p * math.pi) - EULER_GAMMA
    return math.exp(2 * rhs / p - 1)


LOG_KAPPA2 = math.log(quantization_constant(2))


def half_cauchy_pdf(x):
    return 2.0 / (math.pi * (1.0 + np.asarray(x, dtype=float) ** 2))


def neg_log_prior_arrays(kind: PriorKind, a, b):
    """``-log pi(a, b)`` for (k, lambda) or (mu, sigma), vectorised."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if kind is PriorKind.HALF_CAUCHY:
        return 2 * LOG_HALF_CAUCHY_NORM + np.log1p(a * a) + np.log1p(b * b)
    if kind is PriorKind.YANG_XIE:
        return 2 * np.log(a) + np.log(b)
    if kind is PriorKind.LOGNORMAL_PAIR:
        return LOG_PI + np.log1p(a * a) + LOG_HALF_CAUCHY_NORM + np.log1p(b * b)
    raise UnsupportedCombination(f"prior {kind} is not a two-parameter lifetime prior")


# ---------------------------------------------------------------------------
# Fisher log-determinants on batches


def weibull_fisher_logdet_arrays(n: int, scheme, k, lam):
    """``log |J(k, lambda)|`` for the Weibull model under ``scheme``."""
    k = np.asarray(k, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if isinstance(scheme, (Complete, RandomWeibull)):
        return math.log(n * n * math.pi**2 / 6) - 2 * np.log(lam)
    if isinstance(scheme, TypeI):
        z_c = np.exp(k * (math.log(scheme.c) - np.log(lam)))
        with np.errstate(divide="ignore", invalid="ignore"):
            return 2 * (math.log(n) - np.log(lam)) + np.log(weibull_type1_fisher_factor(z_c))
    if isinstance(scheme, TypeII):
        phi1, phi2 = type2_phi_sums(n, scheme.m)
        m = scheme.m
        return math.log(m * m * (math.pi**2 - 6 * phi1**2 + 6 * phi2) / 6) - 2 * np.log(lam)
    raise UnsupportedCombination(f"no Weibull Fisher information for {scheme!r}")


def lognormal_fisher_logdet_arrays(n: int, scheme, mu, sigma):
    sigma = np.asarray(sigma, dtype=float)
    base = math.log(2 * n * n) - 4 * np.log(sigma)
    if isinstance(scheme, Complete):
        return base
    if isinstance(scheme, TypeI):
        z = (math.log(scheme.c) - np.asarray(mu, dtype=float)) / sigma
        with np.errstate(divide="ignore", invalid="ignore"):
            return base + np.log(lognormal_type1_fisher_bracket(z))
    raise UnsupportedCombination(f"lognormal codelength supports complete or type I data, not {scheme!r}")


def weibull_codelength_arrays(log_y, delta, scheme, k, lam, prior: PriorSpec = HALF_CAUCHY):
    """Assertion and detail lengths for a block of Weibull fits."""
    n = log_y.shape[-1]
    assertion = (
        neg_log_prior_arrays(prior.kind, k, lam)
        + 0.5 * weibull_fisher_logdet_arrays(n, scheme, k, lam)
        + LOG_KAPPA2
    )
    detail = 1.0 + weibull_nll_arrays(log_y, delta, k, lam)
    return assertion, detail


def lognormal_codelength_arrays(log_y, delta, scheme, mu, sigma, prior: PriorSpec = LOGNORMAL_PAIR):
    n = log_y.shape[-1]
    log_c = math.log(scheme.c) if isinstance(scheme, TypeI) else None
    assertion = (
        neg_log_prior_arrays(prior.kind, mu, sigma)
        + 0.5 * lognormal_fisher_logdet_arrays(n, scheme, mu, sigma)
        + LOG_KAPPA2
    )
    detail = 1.0 + lognormal_nll_arrays(log_y, delta, mu, sigma, log_c)
    return assertion, detail


# ---------------------------------------------------------------------------
# per-sample API


def _rows(sample: Sample):
    return np.log(sample.y)[None, :], sample.delta[None, :].astype(float)


def mml87_codelength(
    sample: Sample,
    model: Model,
    params: WeibullParams | LognormalParams,
    prior: PriorSpec | None = None,
) -> Codelength:
    """MML87 message length of ``sample`` under a fully specified model.

    Raises
    ------
    UnsupportedCombination
        For a lognormal model on type II or randomly censored data.
    NonpositiveFisher
        If the Fisher determinant evaluates to zero or less.
    """
    model = Model(model)
    ly, dl = _rows(sample)
    if model is Model.WEIBULL:
        if isinstance(sample.scheme, RandomWeibull):
            raise UnsupportedCombination(
                "use random_censoring_codelength for randomly censored samples"
            )
        prior = prior or HALF_CAUCHY
        a, b = np.array([params.k]), np.array([params.lam])
        fisher = weibull_fisher_logdet_arrays(sample.n, sample.scheme, a, b)
        assertion, detail = weibull_codelength_arrays(ly, dl, sample.scheme, a, b, prior)
    else:
        if not isinstance(sample.scheme, (Complete, TypeI)):
            raise UnsupportedCombination(f"lognormal model under {sample.scheme!r}")
        prior = prior or LOGNORMAL_PAIR
        a, b = np.array([params.mu]), np.array([params.sigma])
        fisher = lognormal_fisher_logdet_arrays(sample.n, sample.scheme, a, b)
        assertion, detail = lognormal_codelength_arrays(ly, dl, sample.scheme, a, b, prior)
    if not np.all(np.isfinite(fisher)):
        raise NonpositiveFisher(f"Fisher determinant is not positive at {params}")
    return Codelength(float(assertion[0]), float(detail[0]))


def binomial_codelength(delta, phi: float) -> Codelength:
    """Length of the censoring indicators under a uniform prior on ``phi``."""
    if not 0 < phi < 1:
        raise DomainError(f"phi must lie in (0, 1), got {phi}")
    delta = np.asarray(delta)
    n = len(delta)
    if n < 1:
        raise DomainError("need at least one indicator")
    d = int(delta.sum())
    lp, lq = math.log(phi), math.log1p(-phi)
    # prior = 1, |J| = n / (phi (1 - phi)), kappa_1 = 1/12
    assertion = 0.5 * (math.log(n) - lp - lq) + 0.5 * math.log(1 / 12)
    detail = 0.5 - d * lp - (n - d) * lq
    return Codelength(assertion, detail)


def random_censoring_codelength(sample: Sample, r: ReducedCensorParams) -> Codelength:
    """Indicators first, then every observed time under Weibull(k, lambda)."""
    if not isinstance(sample.scheme, RandomWeibull):
        raise UnsupportedCombination("random_censoring_codelength needs a RandomWeibull sample")
    times = Sample(sample.y, np.ones(sample.n), Complete())
    return binomial_codelength(sample.delta, r.phi) + mml87_codelength(
        times, Model.WEIBULL, WeibullParams(r.k, r.lam)
    )


def bic_score(sample: Sample, model: Model, params_mle) -> float:
    """Negative log-likelihood at the ML fit plus ``(p/2) log n`` with ``p = 2``."""
    model = Model(model)
    ly, dl = _rows(sample)
    if model is Model.WEIBULL:
        nll = weibull_nll_arrays(ly, dl, np.array([params_mle.k]), np.array([params_mle.lam]))
    else:
        log_c = math.log(sample.scheme.c) if isinstance(sample.scheme, TypeI) else None
        nll = lognormal_nll_arrays(
            ly, dl, np.array([params_mle.mu]), np.array([params_mle.sigma]), log_c
        )
    return float(nll[0]) + math.log(sample.n)
