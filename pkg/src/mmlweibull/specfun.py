"""Special functions and quadrature used by the likelihood and divergence code.

The normal CDF/quantile and the exponential integral are thin wrappers over
``scipy.special`` that add the domain checks and tail handling needed here.
The order-derivatives of the lower incomplete gamma function at ``z = 1`` and
the adaptive Gauss-Kronrod integrator are implemented locally.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import special

EULER_GAMMA = float(np.euler_gamma)

# Below this magnitude Ei(z) for z < 0 is reported as -inf.
EI_NEG_ZERO_THRESHOLD = 1e-308


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    max_depth: int = 60

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")


class QuadResult(NamedTuple):
    value: float
    abserr: float
    converged: bool


def std_normal_cdf(x):
    """Standard normal CDF, vectorised."""
    return special.ndtr(x)


def std_normal_logsf(x):
    """``log(1 - Phi(x))`` without cancellation for large ``x``."""
    return special.log_ndtr(-np.asarray(x, dtype=float))


def std_normal_logcdf(x):
    return special.log_ndtr(x)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf`.

    Raises
    ------
    ValueError
        If any ``p`` lies outside the open interval (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError("std_normal_quantile requires 0 < p < 1")
    return special.ndtri(arr) if arr.ndim else float(special.ndtri(arr))


def exp_integral_ei(z):
    """Exponential integral Ei(z), principal value for ``z > 0``.

    ``Ei(0)`` is a logarithmic singularity and raises ``ValueError``.  For
    ``-1e-308 < z < 0`` the result is ``-inf``.
    """
    arr = np.asarray(z, dtype=float)
    if np.any(arr == 0):
        raise ValueError("Ei is singular at z = 0")
    out = special.expi(arr)
    out = np.where((arr < 0) & (arr > -EI_NEG_ZERO_THRESHOLD), -np.inf, out)
    return out if arr.ndim else float(out)


# ---------------------------------------------------------------------------
# gamma^(j)(1, x) = int_0^x (log t)^j e^{-t} dt, j = 0, 1, 2

_SERIES_SWITCH = 5.0
_SERIES_TERMS = 70
_LAGUERRE_X, _LAGUERRE_W = special.roots_laguerre(60)
_M1 = np.arange(1, _SERIES_TERMS + 1, dtype=float)  # m + 1
_SERIES_COEF = np.array(
    [(-1.0) ** m / math.factorial(m) for m in range(_SERIES_TERMS)]
)

GAMMA1_TOTAL = -EULER_GAMMA
GAMMA2_TOTAL = EULER_GAMMA**2 + math.pi**2 / 6


def _order_derivs_series(x: np.ndarray):
    # Termwise integration of e^{-t} = sum (-t)^m / m!.
    L = np.log(x)[:, None]
    xp = np.exp(_M1[None, :] * np.log(x)[:, None]) * _SERIES_COEF[None, :]
    inv = 1.0 / _M1[None, :]
    g0 = (xp * inv).sum(axis=1)
    g1 = (xp * (L * inv - inv**2)).sum(axis=1)
    g2 = (xp * (L * L * inv - 2 * L * inv**2 + 2 * inv**3)).sum(axis=1)
    return g0, g1, g2


def _order_derivs_tail(x: np.ndarray):
    # Complement of the upper tail, tail integral by Gauss-Laguerre after t = x + s.
    lg = np.log(x[:, None] + _LAGUERRE_X[None, :])
    ex = np.exp(-x)
    t1 = ex * (lg * _LAGUERRE_W).sum(axis=1)
    t2 = ex * (lg * lg * _LAGUERRE_W).sum(axis=1)
    return -np.expm1(-x), GAMMA1_TOTAL - t1, GAMMA2_TOTAL - t2


def lower_incomplete_gamma_order_derivs(x):
    """Return ``(gamma(1,x), gamma^(1)(1,x), gamma^(2)(1,x))``.

    The j-th element is ``int_0^x (log t)^j exp(-t) dt``, the j-th derivative
    of the lower incomplete gamma function in its first argument at 1.
    Accepts scalars or arrays; ``x = inf`` gives the complete integrals.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("order derivatives need x >= 0")
    flat = arr.ravel()
    g0 = np.zeros_like(flat)
    g1 = np.zeros_like(flat)
    g2 = np.zeros_like(flat)
    small = (flat > 0) & (flat <= _SERIES_SWITCH)
    big = (flat > _SERIES_SWITCH) & np.isfinite(flat)
    inf = np.isinf(flat)
    if small.any():
        g0[small], g1[small], g2[small] = _order_derivs_series(flat[small])
    if big.any():
        g0[big], g1[big], g2[big] = _order_derivs_tail(flat[big])
    g0[inf], g1[inf], g2[inf] = 1.0, GAMMA1_TOTAL, GAMMA2_TOTAL
    if arr.ndim == 0:
        return float(g0[0]), float(g1[0]), float(g2[0])
    return g0.reshape(arr.shape), g1.reshape(arr.shape), g2.reshape(arr.shape)


def lower_gamma(s, x):
    """Non-regularised lower incomplete gamma ``gamma(s, x)``."""
    return special.gammainc(s, x) * special.gamma(s)


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod (7, 15)

_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KWEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[1:7:2] = _WG[:3]
_GWEIGHTS[7] = _WG[3]
_GWEIGHTS[9:14:2] = _WG[2::-1]


_MAX_SPLITS = 50_000


def _map_infinite(f, a, b):
    """Rewrite an integral over an infinite range on a finite one."""
    if math.isinf(a) and math.isinf(b):
        def g(s):
            t = s / (1 - s * s)
            return f(t) * (1 + s * s) / (1 - s * s) ** 2
        return g, -1.0, 1.0
    if math.isinf(b):
        def g(s):
            return f(a + s / (1 - s)) / (1 - s) ** 2
        return g, 0.0, 1.0
    if math.isinf(a):
        def g(s):
            return f(b - (1 - s) / s) / (s * s)
        return g, 0.0, 1.0
    return f, a, b


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c + h * _NODES
    try:
        fx = np.asarray(f(x), dtype=float)
    except (TypeError, ValueError):
        fx = None
    if fx is None or fx.shape != _NODES.shape:
        fx = np.array([f(float(t)) for t in x], dtype=float)
    k = h * float(fx @ _KWEIGHTS)
    g = h * float(fx @ _GWEIGHTS)
    return k, abs(k - g)


def adaptive_quad(
    f: Callable, a: float, b: float, spec: QuadratureSpec | None = None
) -> QuadResult:
    """Globally adaptive Gauss-Kronrod (7, 15) integration of ``f`` over [a, b].

    ``f`` may be vectorised (called with an array of 15 nodes) or scalar.
    Infinite limits are mapped to a finite interval.  Endpoint singularities
    are fine as long as they are integrable, since no node sits on an
    endpoint.  If some interval hits ``spec.max_depth`` bisections before the
    total error estimate drops below ``spec.abs_tol``, the result is returned
    with ``converged=False``.
    """
    spec = spec or QuadratureSpec()
    if not a < b:
        raise ValueError("adaptive_quad needs a < b")
    g, lo, hi = _map_infinite(f, float(a), float(b))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val, err = _gk15(g, lo, hi)
        heap = [(-err, lo, hi, val, 0)]
        total_val, total_err = val, err
        frozen_err = 0.0
        frozen_val = 0.0
        n_split = 0
        while heap and total_err > spec.abs_tol and frozen_err < spec.abs_tol:
            if n_split >= _MAX_SPLITS:
                break
            n_split += 1
            neg_err, x0, x1, v, depth = heapq.heappop(heap)
            if depth >= spec.max_depth:
                frozen_err += -neg_err
                frozen_val += v
                continue
            xm = 0.5 * (x0 + x1)
            v1, e1 = _gk15(g, x0, xm)
            v2, e2 = _gk15(g, xm, x1)
            total_val += v1 + v2 - v
            total_err += e1 + e2 + neg_err
            heapq.heappush(heap, (-e1, x0, xm, v1, depth + 1))
            heapq.heappush(heap, (-e2, xm, x1, v2, depth + 1))
        # Re-sum from the leaves to shed accumulated rounding in total_val.
        value = math.fsum([item[3] for item in heap]) + frozen_val
        abserr = math.fsum([-item[0] for item in heap]) + frozen_err
    converged = bool(abserr <= spec.abs_tol and np.isfinite(value))
    return QuadResult(float(value), float(abserr), converged)
