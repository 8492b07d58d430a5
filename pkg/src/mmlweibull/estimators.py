"""Point estimators for Weibull and lognormal lifetime models.

Each estimator has a batched core (``*_batch``) operating on an ``(R, n)``
block of replicate datasets that share one censoring scheme, and a
per-sample wrapper that returns an :class:`EstimateReport` and raises on
failure.  Shape equations are solved by bisection on ``log k`` followed by
a single Newton polish; MML87 codelengths are minimised by damped Newton
in log-parameter coordinates, started from the maximum likelihood fit.

When every observation is equal the ML and Yang-Xie score equations have
no root (``NoRoot``).  The MML87 codelength then keeps decreasing as
``k -> inf`` for ``n >= 3`` (the half-Cauchy prior costs ``2 log k``, the
likelihood gains ``n log k``), so the MML87 fit stops at the shape bracket
and raises ``NonConvergence``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .codelength import (
    HALF_CAUCHY,
    LOGNORMAL_PAIR,
    Codelength,
    Model,
    PriorSpec,
    binomial_codelength,
    lognormal_codelength_arrays,
    mml87_codelength,
    weibull_codelength_arrays,
)
from .errors import (
    IncompatibleScheme,
    InsufficientData,
    InsufficientUncensored,
    NoRoot,
    NonConvergence,
    OutOfRange,
    PhiOutOfRange,
)
from .models import (
    Complete,
    LognormalParams,
    RandomCensorParams,
    RandomWeibull,
    ReducedCensorParams,
    Sample,
    TypeI,
    TypeII,
    WeibullParams,
    lift_params,
    lognormal_nll_arrays,
)
from .optimize import BatchResult, bisect_decreasing, minimize_newton
from .specfun import lower_incomplete_gamma_order_derivs


class Method(str, Enum):
    MLE = "mle"
    ROSS = "ross"
    YANG_XIE = "yang-xie"
    SIRVANCI_YANG = "sirvanci-yang"
    MML87 = "mml87"


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-10
    max_iter: int = 200
    k_lo: float = 1e-4
    k_hi: float = 1e4
    score_tol: float = 1e-8
    grad_tol: float = 1e-6

    def __post_init__(self):
        if not 0 < self.k_lo < self.k_hi:
            raise ValueError(f"need 0 < k_lo < k_hi, got {self.k_lo}, {self.k_hi}")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class EstimateReport:
    method: Method
    params: WeibullParams | LognormalParams | RandomCensorParams | None
    converged: bool
    iterations: int
    final_grad_norm: float
    codelength: Codelength | None = None
    shape_only: float | None = None

    @property
    def shape(self) -> float:
        if self.params is None:
            return self.shape_only
        if isinstance(self.params, WeibullParams):
            return self.params.k
        if isinstance(self.params, RandomCensorParams):
            return self.params.theta
        raise AttributeError("lognormal fits have no shape parameter")


def _rows(sample: Sample):
    return np.log(sample.y)[None, :], sample.delta[None, :].astype(float)


# ---------------------------------------------------------------------------
# shape score equations


def _weighted_log_moments(log_y, k):
    """Mean and variance of ``log y`` under weights ``y^k``, stably."""
    kk = k[:, None]
    shift = log_y.max(axis=1, keepdims=True)
    w = np.exp(kk * (log_y - shift))
    sw = w.sum(axis=1)
    mean = (w * log_y).sum(axis=1) / sw
    var = (w * (log_y - mean[:, None]) ** 2).sum(axis=1) / sw
    return mean, var


def shape_score_arrays(log_y, delta, k, offset: float):
    """``(d - offset)/k + sum delta log y - d * sum y^k log y / sum y^k``.

    ``offset = 0`` is the ML score; 2 (complete) or 1 (censored) gives the
    Yang-Xie modified profile score.
    """
    d = delta.sum(axis=1)
    mean, _ = _weighted_log_moments(log_y, k)
    return (d - offset) / k + (delta * log_y).sum(axis=1) - d * mean


def ml_scale_arrays(log_y, delta, k):
    """``lambda^k = sum y^k / d``, evaluated in log space."""
    d = delta.sum(axis=1)
    return np.exp((logsumexp(k[:, None] * log_y, axis=1) - np.log(d)) / k)


def shape_root_batch(log_y, delta, offset: float, cfg: SolverConfig = DEFAULT_CONFIG):
    """Solve the (modified) score equation for each replicate row.

    Returns ``(k, lam, has_root, iterations, score)``; rows without a sign
    change on ``[k_lo, k_hi]`` have NaN estimates.
    """
    R = log_y.shape[0]

    def fun(u, idx):
        return shape_score_arrays(log_y[idx], delta[idx], np.exp(u), offset)

    u, has_root, iters = bisect_decreasing(
        fun, math.log(cfg.k_lo), math.log(cfg.k_hi), R,
        max_iter=cfg.max_iter, xtol=cfg.rel_tol,
    )
    k = np.exp(u)
    ok = np.flatnonzero(has_root)
    if ok.size:
        ly, dl, kk = log_y[ok], delta[ok], k[ok]
        d = dl.sum(axis=1)
        s = shape_score_arrays(ly, dl, kk, offset)
        _, var = _weighted_log_moments(ly, kk)
        slope = -(d - offset) / kk**2 - d * var
        polished = kk - s / slope
        inside = (polished > cfg.k_lo) & (polished < cfg.k_hi)
        s_new = shape_score_arrays(ly, dl, np.where(inside, polished, kk), offset)
        better = inside & (np.abs(s_new) < np.abs(s))
        k[ok] = np.where(better, polished, kk)
    lam = np.full(R, np.nan)
    score = np.full(R, np.nan)
    if ok.size:
        lam[ok] = ml_scale_arrays(log_y[ok], delta[ok], k[ok])
        score[ok] = shape_score_arrays(log_y[ok], delta[ok], k[ok], offset)
    return k, lam, has_root, iters, score


def _score_report(sample, method, offset, cfg) -> EstimateReport:
    ly, dl = _rows(sample)
    k, lam, has_root, iters, score = shape_root_batch(ly, dl, offset, cfg)
    if not has_root[0]:
        raise NoRoot(
            f"{method.value} shape equation has no root in [{cfg.k_lo}, {cfg.k_hi}]"
        )
    gn = abs(float(score[0]))
    return EstimateReport(
        method=method,
        params=WeibullParams(float(k[0]), float(lam[0])),
        converged=gn < cfg.score_tol,
        iterations=int(iters[0]),
        final_grad_norm=gn,
    )


def _reject_random(sample: Sample, what: str):
    if isinstance(sample.scheme, RandomWeibull):
        raise IncompatibleScheme(
            f"{what} does not apply to randomly censored data; use estimate_random_censoring"
        )


def mle_weibull(sample: Sample, cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateReport:
    """Maximum likelihood fit for complete, type I or type II data.

    Raises
    ------
    InsufficientUncensored
        No observed failures.
    NoRoot
        The score has no root, e.g. when all observations are equal.
    """
    _reject_random(sample, "mle_weibull")
    if sample.d < 1:
        raise InsufficientUncensored("maximum likelihood needs at least one failure")
    return _score_report(sample, Method.MLE, 0.0, cfg)


def ross_correction(report: EstimateReport, n: int) -> WeibullParams:
    """Scale the ML shape by ``(n - 2)/(n - 0.68)``; complete data only."""
    if report.method is not Method.MLE:
        raise ValueError("the Ross adjustment applies to a maximum likelihood fit")
    if n <= 2:
        raise InsufficientData(f"Ross adjustment needs n > 2, got n={n}")
    p = report.params
    return WeibullParams((n - 2) / (n - 0.68) * p.k, p.lam)


def ross_weibull(sample: Sample, cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateReport:
    if not isinstance(sample.scheme, Complete):
        raise IncompatibleScheme("the Ross adjustment is defined for complete data only")
    mle = mle_weibull(sample, cfg)
    return EstimateReport(
        method=Method.ROSS,
        params=ross_correction(mle, sample.n),
        converged=mle.converged,
        iterations=mle.iterations,
        final_grad_norm=mle.final_grad_norm,
    )


def yang_xie_offset(scheme) -> float:
    return 2.0 if isinstance(scheme, Complete) else 1.0


def yang_xie_weibull(sample: Sample, cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateReport:
    """Modified profile likelihood shape; the scale is the ML scale at that shape."""
    _reject_random(sample, "yang_xie_weibull")
    if isinstance(sample.scheme, Complete):
        if sample.n < 3:
            raise InsufficientData("Yang-Xie on complete data needs n >= 3")
    elif sample.d < 2:
        raise InsufficientData("Yang-Xie on censored data needs d >= 2")
    return _score_report(sample, Method.YANG_XIE, yang_xie_offset(sample.scheme), cfg)


def sirvanci_yang_correction(p: float) -> float:
    """``g(p) = log log(1-p)^-1 - (1/p) int_0^p log log(1-t)^-1 dt``.

    With ``t = 1 - exp(-u)`` the integral is ``gamma^(1)(1, -log(1-p))``.
    """
    if not 0 < p < 1:
        raise OutOfRange(f"g(p) needs 0 < p < 1, got {p}")
    u = -math.log1p(-p)
    _, g1, _ = lower_incomplete_gamma_order_derivs(u)
    return math.log(u) - g1 / p


def sirvanci_yang(sample: Sample) -> EstimateReport:
    """Closed-form type I shape estimate; only the shape is reported."""
    if not isinstance(sample.scheme, TypeI):
        raise IncompatibleScheme("Sirvanci-Yang needs type I censored data")
    n, d = sample.n, sample.d
    if not 0 < d < n:
        raise OutOfRange(f"Sirvanci-Yang needs 0 < d < n, got d={d}, n={n}")
    c = sample.scheme.c
    obs = sample.y[sample.delta == 1]
    inv_k = float(np.sum(math.log(c) - np.log(obs))) / (d * sirvanci_yang_correction(d / n))
    if not inv_k > 0:
        raise OutOfRange("Sirvanci-Yang estimate of 1/k is not positive")
    return EstimateReport(
        method=Method.SIRVANCI_YANG,
        params=None,
        converged=True,
        iterations=0,
        final_grad_norm=0.0,
        shape_only=1.0 / inv_k,
    )


# ---------------------------------------------------------------------------
# MML87


def weibull_start_points(log_y, delta, cfg: SolverConfig = DEFAULT_CONFIG):
    """ML estimates in log coordinates, or ``(0, median log y)`` where ML fails."""
    k, lam, ok, _, _ = shape_root_batch(log_y, delta, 0.0, cfg)
    x0 = np.column_stack([np.zeros(len(k)), np.median(log_y, axis=1)])
    ok = ok & np.isfinite(lam)
    x0[ok, 0] = np.log(k[ok])
    x0[ok, 1] = np.log(lam[ok])
    return x0


def mml87_weibull_batch(
    log_y, delta, scheme, prior: PriorSpec = HALF_CAUCHY,
    cfg: SolverConfig = DEFAULT_CONFIG, x0=None,
) -> BatchResult:
    """Minimise the Weibull MML87 codelength for each row, in ``(log k, log lam)``."""
    if x0 is None:
        x0 = weibull_start_points(log_y, delta, cfg)
    R = log_y.shape[0]

    def fun(x, idx):
        # Skip the gather when every replicate is still active.
        ly, dl = (log_y, delta) if len(idx) == R else (log_y[idx], delta[idx])
        a, b = weibull_codelength_arrays(ly, dl, scheme, np.exp(x[:, 0]), np.exp(x[:, 1]), prior)
        return a + b

    bound = np.array([math.log(cfg.k_hi) + 1.0, 60.0])
    return minimize_newton(fun, x0, gtol=cfg.grad_tol, max_iter=cfg.max_iter, bound=bound)


def _mml_report(sample, model, res: BatchResult, params, prior) -> EstimateReport:
    if not res.converged[0]:
        raise NonConvergence(
            f"MML87 {model.value} fit did not converge "
            f"(gradient norm {res.grad_norm[0]:.3g} after {res.iterations[0]} iterations)"
        )
    return EstimateReport(
        method=Method.MML87,
        params=params,
        converged=True,
        iterations=int(res.iterations[0]),
        final_grad_norm=float(res.grad_norm[0]),
        codelength=mml87_codelength(sample, model, params, prior),
    )


def mml87_weibull(
    sample: Sample, cfg: SolverConfig = DEFAULT_CONFIG, prior: PriorSpec = HALF_CAUCHY
) -> EstimateReport:
    """Weibull parameters minimising the MML87 codelength (complete, type I, type II)."""
    _reject_random(sample, "mml87_weibull")
    ly, dl = _rows(sample)
    res = mml87_weibull_batch(ly, dl, sample.scheme, prior, cfg)
    params = WeibullParams(float(np.exp(res.x[0, 0])), float(np.exp(res.x[0, 1])))
    return _mml_report(sample, Model.WEIBULL, res, params, prior)


def mml87_phi(delta) -> float:
    """``(d + 1/2)/(n + 1)``: minimiser of the binomial codelength."""
    delta = np.asarray(delta)
    n = len(delta)
    if n < 1:
        raise InsufficientData("need at least one indicator")
    return (float(delta.sum()) + 0.5) / (n + 1)


# ---------------------------------------------------------------------------
# lognormal


def lognormal_start_points(log_y):
    mu = log_y.mean(axis=1)
    sd = log_y.std(axis=1)
    return np.column_stack([mu, np.log(np.where(sd > 0, sd, 1.0))])


def mle_lognormal_batch(log_y, delta, scheme, cfg: SolverConfig = DEFAULT_CONFIG):
    """Returns ``(mu, sigma, ok)``; complete data in closed form, type I by Newton."""
    if isinstance(scheme, Complete):
        mu = log_y.mean(axis=1)
        sd = log_y.std(axis=1)
        return mu, sd, sd > 0
    log_c = math.log(scheme.c)

    def fun(x, idx):
        return lognormal_nll_arrays(log_y[idx], delta[idx], x[:, 0], np.exp(x[:, 1]), log_c)

    res = minimize_newton(fun, lognormal_start_points(log_y), gtol=cfg.grad_tol,
                          max_iter=cfg.max_iter)
    ok = res.converged & (delta.sum(axis=1) >= 1)
    return res.x[:, 0], np.exp(res.x[:, 1]), ok


def mml87_lognormal_batch(
    log_y, delta, scheme, prior: PriorSpec = LOGNORMAL_PAIR,
    cfg: SolverConfig = DEFAULT_CONFIG, x0=None,
) -> BatchResult:
    if x0 is None:
        mu, sd, ok = mle_lognormal_batch(log_y, delta, scheme, cfg)
        x0 = lognormal_start_points(log_y)
        x0[ok, 0] = mu[ok]
        x0[ok, 1] = np.log(sd[ok])

    def fun(x, idx):
        a, b = lognormal_codelength_arrays(
            log_y[idx], delta[idx], scheme, x[:, 0], np.exp(x[:, 1]), prior
        )
        return a + b

    return minimize_newton(fun, x0, gtol=cfg.grad_tol, max_iter=cfg.max_iter, bound=40.0)


def _check_lognormal_scheme(sample: Sample):
    if not isinstance(sample.scheme, (Complete, TypeI)):
        raise IncompatibleScheme(f"lognormal fits support complete or type I data, not {sample.scheme!r}")
    if sample.d < 1:
        raise InsufficientUncensored("lognormal fit needs at least one failure")


def mle_lognormal(sample: Sample, cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateReport:
    _check_lognormal_scheme(sample)
    ly, dl = _rows(sample)
    mu, sd, ok = mle_lognormal_batch(ly, dl, sample.scheme, cfg)
    if not ok[0]:
        raise InsufficientData("lognormal maximum likelihood estimate does not exist")
    return EstimateReport(Method.MLE, LognormalParams(float(mu[0]), float(sd[0])), True, 0, 0.0)


def mml87_lognormal(
    sample: Sample, cfg: SolverConfig = DEFAULT_CONFIG, prior: PriorSpec = LOGNORMAL_PAIR
) -> EstimateReport:
    _check_lognormal_scheme(sample)
    ly, dl = _rows(sample)
    res = mml87_lognormal_batch(ly, dl, sample.scheme, prior, cfg)
    params = LognormalParams(float(res.x[0, 0]), float(np.exp(res.x[0, 1])))
    return _mml_report(sample, Model.LOGNORMAL, res, params, prior)


# ---------------------------------------------------------------------------
# random censoring


def estimate_random_censoring(
    sample: Sample, method: Method = Method.MML87, cfg: SolverConfig = DEFAULT_CONFIG
) -> EstimateReport:
    """Fit ``(phi, k, lam)`` (binomial indicators + Weibull on every time) and lift.

    Raises
    ------
    PhiOutOfRange
        ``method=MLE`` with no censored or no uncensored observation.
    """
    if not isinstance(sample.scheme, RandomWeibull):
        raise IncompatibleScheme("estimate_random_censoring needs a RandomWeibull sample")
    method = Method(method)
    times = Sample(sample.y, np.ones(sample.n), Complete())
    n, d = sample.n, sample.d
    if method is Method.MLE:
        if not 0 < d < n:
            raise PhiOutOfRange(f"ML estimate of phi needs 0 < d < n, got d={d}, n={n}")
        phi = d / n
        fit = mle_weibull(times, cfg)
        length = None
    elif method is Method.MML87:
        phi = mml87_phi(sample.delta)
        fit = mml87_weibull(times, cfg)
        length = binomial_codelength(sample.delta, phi) + fit.codelength
    else:
        raise IncompatibleScheme(f"{method.value} is not available for random censoring")
    reduced = ReducedCensorParams(phi=phi, k=fit.params.k, lam=fit.params.lam)
    return EstimateReport(
        method=method,
        params=lift_params(reduced),
        converged=fit.converged,
        iterations=fit.iterations,
        final_grad_norm=fit.final_grad_norm,
        codelength=length,
    )


def estimate_weibull(sample: Sample, method: Method, cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateReport:
    """Dispatch a Weibull estimator by name."""
    method = Method(method)
    if isinstance(sample.scheme, RandomWeibull):
        return estimate_random_censoring(sample, method, cfg)
    if method is Method.MLE:
        return mle_weibull(sample, cfg)
    if method is Method.ROSS:
        return ross_weibull(sample, cfg)
    if method is Method.YANG_XIE:
        return yang_xie_weibull(sample, cfg)
    if method is Method.SIRVANCI_YANG:
        return sirvanci_yang(sample)
    return mml87_weibull(sample, cfg)


def applicable_methods(scheme) -> list[Method]:
    if isinstance(scheme, Complete):
        return [Method.MLE, Method.ROSS, Method.YANG_XIE, Method.MML87]
    if isinstance(scheme, TypeI):
        return [Method.MLE, Method.YANG_XIE, Method.SIRVANCI_YANG, Method.MML87]
    if isinstance(scheme, TypeII):
        return [Method.MLE, Method.YANG_XIE, Method.MML87]
    return [Method.MLE, Method.MML87]
