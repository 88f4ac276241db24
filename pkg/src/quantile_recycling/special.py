"""Special functions used by the distributions, the recycling ODE and the oracles.

Everything here works on Python floats.  ``erfc`` additionally accepts numpy
arrays because the precision sweeps evaluate it on millions of points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, DomainError

__all__ = [
    "Accuracy",
    "gamma_ratio_half",
    "bessel_k",
    "bessel_k_scaled",
    "bessel_k_ratio",
    "hyp2f1",
    "erfc",
    "erf",
]


@dataclass(frozen=True)
class Accuracy:
    """Relative tolerance and term cap for series evaluations."""

    rel_tol: float = 1e-12
    max_terms: int = 500

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-6):
            raise DomainError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol}")
        if self.max_terms < 16:
            raise DomainError(f"max_terms must be >= 16, got {self.max_terms}")


DEFAULT_ACCURACY = Accuracy()


# ---------------------------------------------------------------------------
# Gamma ratio

# log(Gamma(x + 1/2) / Gamma(x)) - log(x)/2 as a series in 1/x; coefficients of
# x^-1, x^-3, ..., x^-9 from the Bernoulli-polynomial form of Stirling's series.
_HALF_SHIFT_SERIES = (-1.0 / 8.0, 1.0 / 192.0, -1.0 / 640.0, 17.0 / 14336.0, -31.0 / 18432.0)
_DIRECT_GAMMA_LIMIT = 60.0


def _log_half_shift(x: float) -> float:
    """log(Gamma(x + 1/2) / Gamma(x)) for x >= _DIRECT_GAMMA_LIMIT."""
    r = 1.0 / x
    r2 = r * r
    s = 0.0
    for coeff in reversed(_HALF_SHIFT_SERIES):
        s = s * r2 + coeff
    return 0.5 * math.log(x) + s * r


def gamma_ratio_half(n: float) -> float:
    """Return Gamma(n/2) / Gamma((n+1)/2).

    Small arguments use ``math.gamma`` directly (a few ulp each); from
    ``n/2 = 60`` on, an asymptotic series for the log ratio is used so the
    result keeps full relative precision as ``n`` grows without bound.
    """
    if not n > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {n}")
    x = 0.5 * n
    if x < _DIRECT_GAMMA_LIMIT:
        return math.gamma(x) / math.gamma(x + 0.5)
    return math.exp(-_log_half_shift(x))


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind
#
# K_nu(x) e^x = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt.  The integrand is
# even and entire in t, so the trapezoidal rule converges geometrically in 1/h.
# The step is tied to the width of the integrand's peak, which keeps the
# relative error near 1e-15 uniformly in x and nu.

_TRAP_CUTOFF = 40.0  # integrand truncated below exp(-40) of its peak
_TRAP_STEP_FACTOR = 0.35


def _bessel_k_scaled_parts(nu: float, x: float) -> tuple[float, float]:
    """Return (s, log_scale) with K_nu(x) e^x = s * exp(log_scale)."""
    if not x > 0.0:
        raise DomainError(f"bessel_k requires x > 0, got {x}")
    nu = abs(float(nu))
    t_peak = math.asinh(nu / x)
    # 2 x sinh(t/2)^2 == x (cosh t - 1) without cancellation near t = 0
    sp = math.sinh(0.5 * t_peak)
    peak = nu * t_peak - (2.0 * x * sp) * sp

    t = t_peak + 1.0
    for _ in range(100):
        t_new = math.acosh(1.0 + (nu * t - peak + _TRAP_CUTOFF) / x)
        if abs(t_new - t) <= 1e-9 * (1.0 + t):
            t = t_new
            break
        t = t_new
    else:
        raise AccuracyError(f"bessel_k: truncation point did not settle for nu={nu}, x={x}")
    t_max = max(t, t_peak + 1e-3)

    # curvature of the log-integrand at the peak is x cosh(t_peak) = hypot(nu, x)
    width = math.sqrt(math.hypot(nu, x))
    h = _TRAP_STEP_FACTOR * min(0.25, 1.0 / width)
    n = int(math.ceil(t_max / h))
    if n > 200_000:
        raise AccuracyError(f"bessel_k: quadrature would need {n} nodes for nu={nu}, x={x}")
    h = t_max / n
    tt = np.arange(n + 1) * h
    s = np.sinh(0.5 * tt)
    e = -(2.0 * x * s) * s - peak
    f = 0.5 * (np.exp(e + nu * tt) + np.exp(e - nu * tt))
    total = h * (f.sum() - 0.5 * f[0])
    return float(total), peak


def bessel_k_scaled(order: float, x: float) -> float:
    """Exponentially scaled K: e^x K_nu(x)."""
    s, log_scale = _bessel_k_scaled_parts(order, x)
    try:
        return s * math.exp(log_scale)
    except OverflowError as exc:
        raise AccuracyError(f"bessel_k_scaled overflows for nu={order}, x={x}") from exc


def bessel_k(order: float, x: float) -> float:
    """Modified Bessel function of the second kind K_nu(x) for real nu, x > 0.

    K_{-nu} = K_nu is used, so negative orders are accepted.  Raises
    :class:`DomainError` for x <= 0.  Underflows to 0.0 for x beyond ~705.
    """
    s, log_scale = _bessel_k_scaled_parts(order, x)
    try:
        # separate exps: rounding log_scale - x would cost ~x * 1e-16 relative
        return s * math.exp(log_scale) * math.exp(-x)
    except OverflowError as exc:
        raise AccuracyError(f"bessel_k overflows for nu={order}, x={x}") from exc


def bessel_k_ratio(order_num: float, order_den: float, x: float) -> float:
    """K_a(x) / K_b(x) without intermediate overflow or underflow."""
    s1, l1 = _bessel_k_scaled_parts(order_num, x)
    s2, l2 = _bessel_k_scaled_parts(order_den, x)
    return (s1 / s2) * math.exp(l1 - l2)


# ---------------------------------------------------------------------------
# Gauss hypergeometric function


def _is_nonpositive_int(a: float) -> bool:
    return a <= 0.0 and a == math.floor(a)


def _gauss_series(a, b, c, z, acc: Accuracy) -> float:
    term = 1.0
    total = 1.0
    small = 0
    # geometric bound on the remainder once term ratios approach z
    tail_factor = 1.0 / (1.0 - abs(z)) if abs(z) < 1.0 else 1.0
    for k in range(acc.max_terms):
        if (a + k) == 0.0 or (b + k) == 0.0:
            return total
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if abs(term) * tail_factor <= acc.rel_tol * 1e-2 * abs(total):
            small += 1
            if small == 2:
                return total
        else:
            small = 0
    raise AccuracyError(
        f"2F1({a}, {b}; {c}; {z}) series did not converge in {acc.max_terms} terms"
    )


def _hyp2f1_unit(a, b, c, w, acc: Accuracy) -> float:
    """2F1 for 0 <= w < 1, switching to the 1 - w connection formula near 1."""
    terminating = _is_nonpositive_int(a) or _is_nonpositive_int(b)
    if w <= 0.9 or terminating:
        return _gauss_series(a, b, c, w, acc)
    s = c - a - b
    if abs(s - round(s)) < 1e-3:
        # Connection formula is degenerate at integer c - a - b; sum directly.
        slow = Accuracy(acc.rel_tol, max(acc.max_terms, 100_000))
        return _gauss_series(a, b, c, w, slow)
    one_minus = 1.0 - w
    g = math.gamma
    first = g(c) * g(s) / (g(c - a) * g(c - b))
    second = g(c) * g(-s) / (g(a) * g(b))
    return first * _gauss_series(a, b, 1.0 - s, one_minus, acc) + second * one_minus**s * _gauss_series(
        c - a, c - b, 1.0 + s, one_minus, acc
    )


def hyp2f1(a: float, b: float, c: float, z: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.

    Negative arguments go through the Pfaff transformation
    ``2F1(a,b;c;z) = (1-z)^-b 2F1(c-a, b; c; z/(z-1))``, which maps
    (-inf, 0) onto (0, 1).  This covers the variance gamma probability split,
    whose argument is below -1 whenever beta > 0.
    """
    if _is_nonpositive_int(c):
        raise DomainError(f"2F1 undefined for c = {c}")
    if not z < 1.0:
        raise DomainError(f"2F1 requires z < 1, got {z}")
    if z == 0.0:
        return 1.0
    if z > 0.0:
        return _hyp2f1_unit(a, b, c, z, acc)
    w = z / (z - 1.0)
    # Prefer the Pfaff variant that makes the series terminate, if one does.
    if _is_nonpositive_int(c - b) and not _is_nonpositive_int(c - a):
        return (1.0 - z) ** (-a) * _hyp2f1_unit(a, c - b, c, w, acc)
    return (1.0 - z) ** (-b) * _hyp2f1_unit(c - a, b, c, w, acc)


# ---------------------------------------------------------------------------
# Error functions
#
# The C library erfc is within a few ulp wherever the result is a normal double
# (|x| below about 26.55); past that the true value is subnormal.

_erfc_ufunc = np.frompyfunc(math.erfc, 1, 1)
_erf_ufunc = np.frompyfunc(math.erf, 1, 1)


def erfc(x):
    """Complementary error function of a float or array."""
    if np.ndim(x) == 0:
        return math.erfc(float(x))
    return _erfc_ufunc(np.asarray(x, dtype=float)).astype(float)


def erf(x):
    """Error function of a float or array."""
    if np.ndim(x) == 0:
        return math.erf(float(x))
    return _erf_ufunc(np.asarray(x, dtype=float)).astype(float)
