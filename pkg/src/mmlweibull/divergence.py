"""Kullback-Leibler divergences between Weibull models, complete and type I.

Under type I censoring at ``c`` the observation is ``(min(T, c), 1{T <= c})``,
so the divergence is the density part on ``(0, c)`` plus the atom
``S(c)`` at the censoring time.  All ``*_arrays`` functions broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .errors import DomainError
from .models import WeibullParams
from .specfun import EULER_GAMMA


class KLRegime(str, Enum):
    WEIBULL_TYPE1 = "weibull-type1"
    WEIBULL_SAME_SHAPE_TYPE1 = "weibull-same-shape-type1"
    WEIBULL_COMPLETE = "weibull-complete"
    EXPONENTIAL_TYPE1 = "exponential-type1"
    EXPONENTIAL_COMPLETE = "exponential-complete"


@dataclass(frozen=True)
class KLResult:
    value: float
    regime: KLRegime


def _positive(**kw):
    for name, v in kw.items():
        if not (np.all(np.isfinite(v)) and np.all(np.asarray(v) > 0)):
            raise DomainError(f"{name} must be positive and finite, got {v}")


def same_shape_type1_arrays(k, l0, l1, c):
    """``(1 - exp(-(c/l0)^k)) ((l0/l1)^k + k log(l1/l0) - 1)``.

    The second factor is written as ``expm1(u) - u`` with ``u = k log(l0/l1)``
    to keep accuracy when the scales nearly agree.
    """
    k, l0, l1, c = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (k, l0, l1, c)))
    u = k * np.log(l0 / l1)
    z0 = np.exp(k * np.log(c / l0))
    return -np.expm1(-z0) * (np.expm1(u) - u)


def weibull_type1_arrays(k0, l0, k1, l1, c):
    """Type I divergence ``KL(Weibull(k0, l0) || Weibull(k1, l1))``.

    ``exp(-z0) A1 + (l0/l1)^k1 A2 + (1 - k1/k0) A3 + log((k0/k1)(l1/l0)^k1) - 1``
    with ``z0 = (c/l0)^k0``, ``A2 = gamma_lower(k1/k0 + 1, z0)`` and
    ``A3 = Ei(-z0) - gamma``.
    """
    k0, l0, k1, l1, c = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (k0, l0, k1, l1, c))
    )
    log_c = np.log(c)
    log_z0 = k0 * (log_c - np.log(l0))
    z0 = np.exp(log_z0)
    ratio = k1 / k0
    # exp(-z0) A1, with (c/l1)^k1 folded into the exponent so large c cannot overflow.
    a1_log = np.log(k1 / k0) + (k1 - k0) * log_c + k0 * np.log(l0) - k1 * np.log(l1) + 1.0
    with np.errstate(over="ignore", under="ignore"):
        atom = np.exp(-z0) * a1_log + np.exp(-z0 + k1 * (log_c - np.log(l1)))
    s = ratio + 1.0
    log_pref = k1 * np.log(l0 / l1) + special.gammaln(s)
    term2 = np.exp(log_pref) * special.gammainc(s, z0)
    ei = np.where(z0 > 0, special.expi(-np.where(z0 > 0, z0, 1.0)), -np.inf)
    a3 = ei - EULER_GAMMA
    term3 = np.where(ratio == 1.0, 0.0, (1.0 - ratio) * a3)
    const = np.log(k0 / k1) + k1 * np.log(l1 / l0) - 1.0
    return atom + term2 + term3 + const


def weibull_complete_arrays(k0, l0, k1, l1):
    """``(l0/l1)^k1 Gamma(k1/k0 + 1) + gamma (k1/k0 - 1) + log((k0/k1)(l1/l0)^k1) - 1``."""
    k0, l0, k1, l1 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (k0, l0, k1, l1)))
    ratio = k1 / k0
    lead = np.exp(k1 * np.log(l0 / l1) + special.gammaln(ratio + 1.0))
    return lead + EULER_GAMMA * (ratio - 1.0) + np.log(k0 / k1) + k1 * np.log(l1 / l0) - 1.0


def kl_weibull_type1(p0: WeibullParams, p1: WeibullParams, c: float) -> KLResult:
    """Divergence from ``p0`` to ``p1`` for observations censored at ``c``."""
    _positive(c=c)
    if p0.k == p1.k:
        v = same_shape_type1_arrays(p0.k, p0.lam, p1.lam, c)
        return KLResult(float(v), KLRegime.WEIBULL_SAME_SHAPE_TYPE1)
    v = weibull_type1_arrays(p0.k, p0.lam, p1.k, p1.lam, c)
    return KLResult(float(v), KLRegime.WEIBULL_TYPE1)


def kl_weibull_complete(p0: WeibullParams, p1: WeibullParams) -> KLResult:
    if p0.k == 1.0 and p1.k == 1.0:
        r = p0.lam / p1.lam
        u = math.log(r)
        return KLResult(math.expm1(u) - u, KLRegime.EXPONENTIAL_COMPLETE)
    v = weibull_complete_arrays(p0.k, p0.lam, p1.k, p1.lam)
    return KLResult(float(v), KLRegime.WEIBULL_COMPLETE)


def kl_exponential_type1(lam0: float, lam1: float, c: float) -> KLResult:
    """``(1 - exp(-c/lam0)) (lam0/lam1 + log(lam1/lam0) - 1)``."""
    _positive(lam0=lam0, lam1=lam1, c=c)
    v = same_shape_type1_arrays(1.0, lam0, lam1, c)
    return KLResult(float(v), KLRegime.EXPONENTIAL_TYPE1)


def kl_weibull(p0: WeibullParams, p1: WeibullParams, c: float | None = None) -> KLResult:
    """Type I divergence when ``c`` is given, complete-data divergence otherwise."""
    if c is None or math.isinf(c):
        return kl_weibull_complete(p0, p1)
    return kl_weibull_type1(p0, p1, c)
