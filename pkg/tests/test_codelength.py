import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mmlweibull.codelength import (
    HALF_CAUCHY,
    LOGNORMAL_PAIR,
    YANG_XIE,
    Codelength,
    Model,
    PriorKind,
    binomial_codelength,
    bic_score,
    half_cauchy_pdf,
    mml87_codelength,
    neg_log_prior_arrays,
    quantization_constant,
    random_censoring_codelength,
)
from mmlweibull.errors import DomainError, NonpositiveFisher, UnsupportedCombination
from mmlweibull.estimators import mle_lognormal, mle_weibull
from mmlweibull.models import (
    Complete,
    LognormalParams,
    RandomCensorParams,
    RandomWeibull,
    Sample,
    WeibullParams,
    censor_type1,
    censor_type2,
    fisher_det_lognormal,
    fisher_det_weibull_type1,
    fisher_det_weibull_type2,
    nll_lognormal,
    nll_weibull,
    reduce_params,
    sample_lognormal,
    sample_random_censoring,
    sample_weibull,
)

LOG_K2 = math.log(5 / (36 * math.sqrt(3)))


def test_quantization_constants():
    assert quantization_constant(1) == 1 / 12
    assert quantization_constant(2) == pytest.approx(0.0801875, abs=5e-8)
    assert quantization_constant(3) == pytest.approx(0.0785433, abs=5e-8)
    with pytest.raises(ValueError):
        quantization_constant(0)


def test_quantization_constant_large_p_formula():
    g = float(np.euler_gamma)
    for p in (4, 10, 100):
        lhs = (p / 2) * (math.log(quantization_constant(p)) + 1)
        rhs = -(p / 2) * math.log(2 * math.pi) + 0.5 * math.log(p * math.pi) - g
        assert lhs == pytest.approx(rhs, abs=1e-10)
    # tends to 1/(2 pi e) from above
    assert quantization_constant(1000) > 1 / (2 * math.pi * math.e)


def test_half_cauchy_normalisation_and_median():
    total = integrate.quad(half_cauchy_pdf, 0, math.inf, epsabs=1e-12)[0]
    lower = integrate.quad(half_cauchy_pdf, 0, 1, epsabs=1e-12)[0]
    upper = integrate.quad(half_cauchy_pdf, 1, math.inf, epsabs=1e-12)[0]
    assert total == pytest.approx(1.0, abs=1e-8)
    assert lower == pytest.approx(0.5, abs=1e-8)
    assert upper == pytest.approx(0.5, abs=1e-8)


def test_prior_values():
    assert neg_log_prior_arrays(PriorKind.HALF_CAUCHY, 1.0, 1.0) == pytest.approx(2 * math.log(math.pi))
    assert neg_log_prior_arrays(PriorKind.YANG_XIE, 2.0, 3.0) == pytest.approx(math.log(12.0))
    # Cauchy(0,1) at mu = 0 times half-Cauchy at sigma = 1
    assert neg_log_prior_arrays(PriorKind.LOGNORMAL_PAIR, 0.0, 1.0) == pytest.approx(
        -math.log(1 / math.pi) - math.log(1 / math.pi)
    )
    assert not YANG_XIE.proper and HALF_CAUCHY.proper
    with pytest.raises(UnsupportedCombination):
        neg_log_prior_arrays(PriorKind.BINOMIAL_UNIFORM, 1.0, 1.0)


def test_complete_unit_example():
    s = Sample([1.0], [1])
    cl = mml87_codelength(s, Model.WEIBULL, WeibullParams(1.0, 1.0))
    assert cl.assertion == pytest.approx(2 * math.log(math.pi) + 0.5 * math.log(math.pi**2 / 6) + LOG_K2)
    assert cl.detail == pytest.approx(2.0)
    assert cl.total == cl.assertion + cl.detail


@settings(max_examples=40)
@given(k=st.floats(0.2, 6), lam=st.floats(0.2, 6), seed=st.integers(0, 10_000))
def test_weibull_codelength_assembles_from_pieces(k, lam, seed):
    y = sample_weibull(WeibullParams(1.5, 1.0), 12, seed)
    p = WeibullParams(k, lam)
    for s in (Sample(y, np.ones(12)), censor_type1(y, 0.9), censor_type2(y, 7)):
        if isinstance(s.scheme, Complete):
            det = 12**2 * math.pi**2 / (6 * lam**2)
        elif s.scheme.name == "type1":
            det = fisher_det_weibull_type1(12, 0.9, p)
        else:
            det = fisher_det_weibull_type2(12, 7, p)
        prior = math.log(math.pi**2 / 4) + math.log1p(k * k) + math.log1p(lam * lam)
        cl = mml87_codelength(s, Model.WEIBULL, p)
        assert cl.assertion == pytest.approx(prior + 0.5 * math.log(det) + LOG_K2, rel=1e-11)
        assert cl.detail == pytest.approx(1.0 + nll_weibull(s, p), rel=1e-12)
        assert abs(cl.total - (cl.assertion + cl.detail)) <= 1e-12 * max(1.0, abs(cl.total))


def test_lognormal_codelength_assembles_from_pieces():
    y = sample_lognormal(LognormalParams(0.0, 1.0), 15, 2)
    p = LognormalParams(0.3, 0.8)
    for s, c in ((Sample(y, np.ones(15)), None), (censor_type1(y, 1.1), 1.1)):
        prior = math.log(math.pi) + math.log1p(0.09) + math.log(math.pi / 2) + math.log1p(0.64)
        cl = mml87_codelength(s, Model.LOGNORMAL, p)
        det = fisher_det_lognormal(15, p, c)
        assert cl.assertion == pytest.approx(prior + 0.5 * math.log(det) + LOG_K2, rel=1e-12)
        assert cl.detail == pytest.approx(1.0 + nll_lognormal(s, p), rel=1e-12)


def test_codelength_errors():
    y = sample_weibull(WeibullParams(1.0, 1.0), 6, 0)
    with pytest.raises(UnsupportedCombination):
        mml87_codelength(censor_type2(y, 3), Model.LOGNORMAL, LognormalParams(0, 1))
    with pytest.raises(UnsupportedCombination):
        mml87_codelength(Sample(y, np.ones(6), RandomWeibull()), Model.WEIBULL, WeibullParams(1, 1))
    # c so small that z_c underflows: the determinant collapses to zero
    s = censor_type1(np.array([1e-300, 2.0]), 1e-290)
    with pytest.raises(NonpositiveFisher):
        mml87_codelength(s, Model.WEIBULL, WeibullParams(5.0, 1e10))


def test_codelength_addition():
    a, b = Codelength(1.0, 2.0), Codelength(0.5, 0.25)
    assert (a + b) == Codelength(1.5, 2.25)
    assert (a + b).total == 3.75


def test_binomial_codelength_examples():
    cl = binomial_codelength([1] * 6 + [0] * 6, 0.5)
    assert cl.total == pytest.approx(13 * math.log(2) + 0.5, abs=1e-12)
    # n = 10, d = 0, phi = 1/22; frozen from an mpmath evaluation of
    # -(d + 1/2) log phi - (n - d + 1/2) log(1 - phi) + (1 + log(n/12)) / 2
    assert binomial_codelength([0] * 10, 1 / 22).total == pytest.approx(2.4428206124485556119, abs=1e-12)
    with pytest.raises(DomainError):
        binomial_codelength([1, 0], 0.0)


@pytest.mark.parametrize("n,d", [(10, 0), (10, 3), (7, 7), (50, 21)])
def test_binomial_codelength_minimiser(n, d):
    delta = [1] * d + [0] * (n - d)
    grid = np.linspace(1e-4, 1 - 1e-4, 20001)
    vals = [binomial_codelength(delta, float(g)).total for g in grid]
    best = grid[int(np.argmin(vals))]
    assert abs(best - (d + 0.5) / (n + 1)) <= grid[1] - grid[0]


def test_random_censoring_codelength_additivity_and_invariance():
    s = sample_random_censoring(RandomCensorParams(2.0, 1.5, 1.0), 40, 9)
    p = RandomCensorParams(1.8, 1.4, 1.1)
    r = reduce_params(p)
    total = random_censoring_codelength(s, r)
    times = Sample(s.y, np.ones(s.n))
    pieces = binomial_codelength(s.delta, r.phi).total + mml87_codelength(
        times, Model.WEIBULL, WeibullParams(r.k, r.lam)
    ).total
    assert total.total == pieces
    with pytest.raises(UnsupportedCombination):
        random_censoring_codelength(times, r)


def test_bic_examples():
    s = Sample([2.0], [1])
    p = WeibullParams(1.0, 2.0)
    assert bic_score(s, Model.WEIBULL, p) == nll_weibull(s, p)
    y = sample_weibull(WeibullParams(1.0, 1.0), 100, 3)
    s = Sample(y, np.ones(100))
    p = mle_weibull(s).params
    assert bic_score(s, Model.WEIBULL, p) - nll_weibull(s, p) == pytest.approx(4.60517, abs=1e-5)
    q = mle_lognormal(s).params
    assert bic_score(s, Model.LOGNORMAL, q) == pytest.approx(nll_lognormal(s, q) + math.log(100))


def test_codelength_minus_bic_is_bounded():
    # I87 at the MLE minus the BIC score stays O(1) as n grows
    p = WeibullParams(1.5, 2.0)
    gaps = []
    for n in (100, 1000, 10_000):
        s = Sample(sample_weibull(p, n, n), np.ones(n))
        mle = mle_weibull(s).params
        gaps.append(mml87_codelength(s, Model.WEIBULL, mle).total - bic_score(s, Model.WEIBULL, mle))
    assert max(gaps) - min(gaps) < 1.0
    assert all(abs(g) < 10 for g in gaps)


def test_lognormal_prior_pair_default():
    s = Sample([1.0, 2.0, 3.0], [1, 1, 1])
    a = mml87_codelength(s, Model.LOGNORMAL, LognormalParams(0.5, 1.0))
    b = mml87_codelength(s, Model.LOGNORMAL, LognormalParams(0.5, 1.0), LOGNORMAL_PAIR)
    assert a == b


def test_mml87_minimiser_beats_mle_on_random_datasets():
    from mmlweibull.estimators import mml87_weibull_batch, shape_root_batch
    from mmlweibull.codelength import weibull_codelength_arrays

    rng = np.random.default_rng(99)
    k = np.exp(rng.uniform(-1.0, 2.0, 1000))
    log_y = np.log(-np.log(rng.random((1000, 12)))) / k[:, None]
    delta = np.ones_like(log_y)
    res = mml87_weibull_batch(log_y, delta, Complete())
    k_ml, lam_ml, ok, _, _ = shape_root_batch(log_y, delta, 0.0)
    assert res.converged.all() and ok.all()
    a, b = weibull_codelength_arrays(log_y, delta, Complete(), k_ml, lam_ml, HALF_CAUCHY)
    assert np.all(res.fun <= a + b + 1e-12)
