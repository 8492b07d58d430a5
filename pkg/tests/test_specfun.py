import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmlweibull.specfun import (
    EULER_GAMMA,
    GAMMA1_TOTAL,
    GAMMA2_TOTAL,
    QuadratureSpec,
    adaptive_quad,
    exp_integral_ei,
    lower_gamma,
    lower_incomplete_gamma_order_derivs,
    std_normal_cdf,
    std_normal_logsf,
    std_normal_quantile,
)


def _order_deriv_oracle(x, j):
    mp.mp.dps = 30
    return float(mp.quad(lambda t: mp.log(t) ** j * mp.exp(-t), [0, min(x, 1), x]))


def test_normal_cdf_and_quantile_basics():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_quantile(0.5) == 0.0
    assert std_normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-12)
    with pytest.raises(ValueError):
        std_normal_quantile(0.0)
    with pytest.raises(ValueError):
        std_normal_quantile(1.0)


def test_normal_logsf_deep_tail():
    # log(1 - Phi(40)) is about -804.6; naive evaluation gives -inf
    mp.mp.dps = 30
    expected = float(mp.log(mp.ncdf(-40)))
    assert std_normal_logsf(40.0) == pytest.approx(expected, rel=1e-12)


@given(st.floats(1e-6, 1 - 1e-6))
def test_quantile_inverts_cdf(p):
    assert std_normal_cdf(std_normal_quantile(p)) == pytest.approx(p, rel=1e-10, abs=1e-15)


def test_ei_against_mpmath():
    for z in (-30.0, -2.5, -1e-3, 0.7, 5.0):
        assert exp_integral_ei(z) == pytest.approx(float(mp.ei(z)), rel=1e-13)


def test_ei_edges():
    with pytest.raises(ValueError):
        exp_integral_ei(0.0)
    assert exp_integral_ei(-1e-320) == -math.inf
    assert exp_integral_ei(-800.0) == 0.0


@pytest.mark.parametrize("x", [1e-8, 0.01, 0.5, 1.0, 4.9, 5.0, 5.1, 12.0, 40.0])
def test_order_derivs_against_quadrature(x):
    g0, g1, g2 = lower_incomplete_gamma_order_derivs(x)
    assert g0 == pytest.approx(-math.expm1(-x), rel=1e-13)
    assert g1 == pytest.approx(_order_deriv_oracle(x, 1), rel=1e-11, abs=1e-14)
    assert g2 == pytest.approx(_order_deriv_oracle(x, 2), rel=1e-11, abs=1e-14)


def test_order_derivs_totals_and_zero():
    assert lower_incomplete_gamma_order_derivs(math.inf) == (1.0, GAMMA1_TOTAL, GAMMA2_TOTAL)
    assert GAMMA1_TOTAL == -EULER_GAMMA
    assert GAMMA2_TOTAL == pytest.approx(EULER_GAMMA**2 + math.pi**2 / 6)
    assert lower_incomplete_gamma_order_derivs(0.0) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        lower_incomplete_gamma_order_derivs(-1.0)


def test_order_derivs_vectorised_matches_scalar():
    xs = np.array([0.2, 3.0, 7.5, np.inf])
    g0, g1, g2 = lower_incomplete_gamma_order_derivs(xs)
    for i, x in enumerate(xs):
        assert (g0[i], g1[i], g2[i]) == lower_incomplete_gamma_order_derivs(float(x))


@settings(max_examples=50)
@given(st.floats(1e-4, 60.0))
def test_first_order_derivative_closed_form(x):
    # gamma^(1)(1, x) = Ei(-x) - gamma - exp(-x) log x
    _, g1, _ = lower_incomplete_gamma_order_derivs(x)
    closed = exp_integral_ei(-x) - EULER_GAMMA - math.exp(-x) * math.log(x)
    assert g1 == pytest.approx(closed, rel=1e-10, abs=1e-12)


def test_lower_gamma():
    assert lower_gamma(1.0, 2.0) == pytest.approx(1 - math.exp(-2.0), rel=1e-14)
    assert lower_gamma(2.5, 1.3) == pytest.approx(float(mp.gammainc(2.5, 0, 1.3)), rel=1e-13)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_depth=0)


def test_adaptive_quad_smooth_and_singular():
    r = adaptive_quad(np.sin, 0.0, math.pi)
    assert r.converged and r.value == pytest.approx(2.0, abs=1e-12)
    # integrable log singularity at 0
    r = adaptive_quad(lambda t: np.log(t), 0.0, 1.0, QuadratureSpec(abs_tol=1e-10))
    assert r.value == pytest.approx(-1.0, abs=1e-9)


def test_adaptive_quad_infinite_ranges():
    r = adaptive_quad(lambda t: np.exp(-t), 0.0, math.inf)
    assert r.value == pytest.approx(1.0, abs=1e-11)
    r = adaptive_quad(lambda t: np.exp(-t * t), -math.inf, math.inf)
    assert r.value == pytest.approx(math.sqrt(math.pi), abs=1e-11)
    r = adaptive_quad(lambda t: np.exp(t), -math.inf, 0.0)
    assert r.value == pytest.approx(1.0, abs=1e-11)


def test_adaptive_quad_scalar_only_integrand():
    r = adaptive_quad(lambda t: math.exp(-t), 0.0, 2.0)
    assert r.value == pytest.approx(1 - math.exp(-2.0), abs=1e-13)


def test_adaptive_quad_reports_nonconvergence():
    # 1/t is not integrable at 0
    r = adaptive_quad(lambda t: 1.0 / t, 0.0, 1.0, QuadratureSpec(abs_tol=1e-12, max_depth=8))
    assert not r.converged


def test_adaptive_quad_rejects_empty_interval():
    with pytest.raises(ValueError):
        adaptive_quad(np.sin, 1.0, 1.0)
