"""Reference quantiles used to check every kernel and solver in the package.

Nothing in here calls the kernels under test.  The normal quantile is obtained
by Newton iteration on erfc (log domain in the tails, erf domain near the
centre) and cross-checked against the power series of the inverse error
function.  Student quantiles use exact forms for n = 1, 2, 4 and
quadrature-plus-Newton otherwise; other distributions go through quadrature of
their density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .distributions import Distribution, StudentT
from .errors import DomainError, OracleFailure
from .special import erf, erfc, gamma_ratio_half

__all__ = [
    "OracleConfig",
    "norm_cdf",
    "norm_sf",
    "oracle_normal_quantile",
    "oracle_exp_normal",
    "probit_series",
    "oracle_student_quantile",
    "oracle_student_from_gaussian",
    "oracle_cdf_inverse",
]

_SQRT2 = math.sqrt(2.0)
_LOG2 = math.log(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class OracleConfig:
    """``abs_tol`` is an absolute floor on the Newton step, used near x = 0."""

    abs_tol: float = 1e-16
    max_iter: int = 200
    quad_tol: float = 1e-12

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.quad_tol > 0 and self.max_iter > 0):
            raise DomainError("oracle tolerances and iteration cap must be positive")


DEFAULT_CONFIG = OracleConfig()


# 1/sqrt(2) as an unevaluated sum of two doubles
_RSQRT2_HI = 0.7071067811865476
_RSQRT2_LO = -4.833646656726457e-17
_SPLIT = 134217729.0  # 2^27 + 1
_TWO_RSQRTPI = 2.0 / math.sqrt(math.pi)


def _scaled(v):
    """(x, e) with x + e = v / sqrt(2) to about twice double precision."""
    x = v * _RSQRT2_HI
    c = _SPLIT * v
    vh = c - (c - v)
    vl = v - vh
    c = _SPLIT * _RSQRT2_HI
    sh = c - (c - _RSQRT2_HI)
    sl = _RSQRT2_HI - sh
    err = ((vh * sh - x) + vh * sl + vl * sh) + vl * sl
    return x, err + v * _RSQRT2_LO


def _half_erfc(v):
    """erfc(v / sqrt(2)) / 2 = Phi(-v), with v / sqrt(2) not rounded first.

    Rounding the scaled argument costs about v^2 ulp of relative accuracy in
    the far tail; the first-order correction below removes that.
    """
    x, e = _scaled(v)
    base = erfc(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = _TWO_RSQRTPI * np.exp(-x * x) / base
    return 0.5 * base * (1.0 - e * np.where(base > 0.0, ratio, 0.0))


def _half_erf(v):
    """erf(v / sqrt(2)) / 2 = Phi(v) - 1/2."""
    x, e = _scaled(v)
    return 0.5 * (erf(x) + e * _TWO_RSQRTPI * np.exp(-x * x))


def norm_cdf(z):
    return _half_erfc(-np.asarray(z, dtype=float)) if np.ndim(z) else float(_half_erfc(-float(z)))


def norm_sf(z):
    return _half_erfc(np.asarray(z, dtype=float)) if np.ndim(z) else float(_half_erfc(float(z)))


# ---------------------------------------------------------------------------
# Normal quantile, Newton on erfc


_POLISH_TOL = 1e-12
_POLISH_STEPS = 3


def _newton(z, step_fn, cfg: OracleConfig, what: str):
    """Elementwise Newton with per-element stopping.

    An element stops once its step is within 4 ulp, or after a few polishing
    steps once it is within 1e-12 relative (rounding can make the last bit
    cycle).  ``step_fn(z, idx)`` returns Newton steps for the elements idx.
    """
    z = np.array(z, dtype=float)
    active = np.arange(z.size)
    polish = np.zeros(z.size, dtype=np.int64)
    for _ in range(cfg.max_iter):
        if active.size == 0:
            return z
        step = step_fn(z[active], active)
        z[active] = z[active] - step
        rel = np.abs(step) / np.maximum(np.abs(z[active]), 1e-300)
        close = rel <= _POLISH_TOL
        polish[active[close]] += 1
        done = (rel <= 4.0 * _EPS) | (polish[active] > _POLISH_STEPS)
        active = active[~done]
    if active.size == 0:
        return z
    raise OracleFailure(f"normal quantile ({what} Newton) did not converge")


_LOG_ASYMPTOTIC_BELOW = -36.0


def _log_cdf_lower(z):
    """log Phi(z) for z <= 0, past the underflow of Phi itself.

    Below z = -36 the Mills ratio series 1 - 1/z^2 + 3/z^4 - ... is summed to
    20 terms; its smallest term there is far below double precision.
    """
    z = np.asarray(z, dtype=float)
    deep = z < _LOG_ASYMPTOTIC_BELOW
    zs = np.where(deep, z, _LOG_ASYMPTOTIC_BELOW)
    r = 1.0 / (zs * zs)
    series = np.ones_like(zs)
    term = np.ones_like(zs)
    for k in range(1, 21):
        term = -term * (2 * k - 1) * r
        series = series + term
    asym = -0.5 * zs * zs - np.log(-zs) - _LOG_SQRT_2PI + np.log(series)
    with np.errstate(divide="ignore"):
        direct = np.log(_half_erfc(-np.where(deep, 0.0, z)))
    return np.where(deep, asym, direct)


def _lower_from_log(logp: np.ndarray, cfg: OracleConfig) -> np.ndarray:
    """z <= 0 with log Phi(z) = logp, for logp <= log(1/4)."""
    t = np.sqrt(-2.0 * logp)
    # rational starting value, |error| < 4.5e-4
    z = -(t - (2.515517 + t * (0.802853 + t * 0.010328)) / (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))))
    # log Phi is concave and increasing, so after the first step the iterates
    # stay left of the root and climb monotonically onto it.
    def step(zz, idx):
        log_cdf = _log_cdf_lower(zz)
        hazard = np.exp(-0.5 * zz * zz - _LOG_SQRT_2PI - log_cdf)
        return (log_cdf - logp[idx]) / hazard

    return _newton(z, step, cfg, "tail")


def _central(c: np.ndarray, cfg: OracleConfig) -> np.ndarray:
    """z with Phi(z) - 1/2 = c, for |c| <= 1/4."""
    def step(zz, idx):
        return (_half_erf(zz) - c[idx]) / np.exp(-0.5 * zz * zz - _LOG_SQRT_2PI)

    return _newton(c * _SQRT_2PI, step, cfg, "central")


def _normal_from_parts(log_tail, centre, positive, cfg):
    """Combine the two formulations.

    ``log_tail`` is log of the smaller tail probability min(u, 1-u), ``centre``
    is u - 1/2 (only read where |centre| <= 1/4) and ``positive`` marks u > 1/2.
    """
    z = np.empty(np.shape(centre))
    use_centre = np.abs(centre) <= 0.25
    if np.any(use_centre):
        z[use_centre] = _central(centre[use_centre], cfg)
    tail = ~use_centre
    if np.any(tail):
        lower = _lower_from_log(log_tail[tail], cfg)
        z[tail] = np.where(positive[tail], -lower, lower)
    return z


def oracle_normal_quantile(u, config: OracleConfig = DEFAULT_CONFIG):
    """Phi^{-1}(u) for a float or array of probabilities in (0, 1)."""
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("probabilities must lie in (0, 1)")
    positive = u > 0.5
    # both 1 - u (for u >= 1/2) and u - 1/2 (for u >= 1/4) are exact
    tail = np.where(positive, 1.0 - u, u)
    z = _normal_from_parts(np.log(tail), u - 0.5, positive, config)
    return float(z[0]) if scalar else z


def oracle_exp_normal(v, config: OracleConfig = DEFAULT_CONFIG):
    """Phi^{-1}(1 - e^{-v}/2), without forming 1 - e^{-v}/2.

    This is the normal quantile in exponential coordinates.  For v >= 0 the
    upper tail probability e^{-v}/2 is carried as its logarithm, so v can run
    far past the point where it underflows.  Negative v down to -log 2 (the
    lower half of the unit interval) is also accepted.
    """
    scalar = np.ndim(v) == 0
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(~(v > -_LOG2)):
        raise DomainError("exponential coordinate must exceed -log 2")
    positive = v > 0.0
    with np.errstate(invalid="ignore"):
        log_tail = np.where(positive, -v - _LOG2, np.log1p(-0.5 * np.exp(-v)))
    centre = -0.5 * np.expm1(-v)
    z = _normal_from_parts(log_tail, centre, positive, config)
    return float(z[0]) if scalar else z


# ---------------------------------------------------------------------------
# Second method: Maclaurin series of the inverse error function


@lru_cache(maxsize=None)
def _erfinv_coefficients(terms: int) -> tuple[float, ...]:
    c = [1.0]
    for k in range(1, terms):
        c.append(sum(c[m] * c[k - 1 - m] / ((m + 1) * (2 * m + 1)) for m in range(k)))
    return tuple(ck / (2 * k + 1) for k, ck in enumerate(c))


def probit_series(u: float, terms: int = 600) -> float:
    """Phi^{-1}(u) from the power series of erfinv about 0.

    Converges on the open unit interval but slowly near the ends; intended
    for u in [0.05, 0.95] as an independent check on the Newton oracle.
    """
    if not 0.0 < u < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {u}")
    x = 0.5 * math.sqrt(math.pi) * (2.0 * u - 1.0)
    x2 = x * x
    total = 0.0
    power = x
    for a in _erfinv_coefficients(terms):
        total += a * power
        power *= x2
    return _SQRT2 * total


# ---------------------------------------------------------------------------
# Student t


def _student_closed(tail, centre, n):
    """Positive Student quantile from tail mass p and centre mass c = 1/2 - p."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return _student_closed_forms(tail, centre, n)


def _student_closed_forms(tail, centre, n):
    if n == 1.0:
        return np.where(tail < 0.25, 1.0 / np.tan(np.pi * tail), np.tan(np.pi * centre))
    if n == 2.0:
        # (1 - 2p) / sqrt(2 p (1 - p)), with p (1 - p) = 1/4 - c^2
        return np.where(
            tail < 0.25,
            (1.0 - 2.0 * tail) / np.sqrt(2.0 * tail * (1.0 - tail)),
            2.0 * centre / np.sqrt(2.0 * (0.25 - centre * centre)),
        )
    # n == 4: with alpha = 4p(1-p) and theta = arccos(sqrt(alpha)),
    # t^2 = 4 (cos(theta/3)/cos(theta) - 1) = 8 sin(2 theta/3) sin(theta/3) / cos(theta)
    sin_t = np.where(tail < 0.25, 1.0 - 2.0 * tail, 2.0 * centre)
    cos_t = np.sqrt(np.where(tail < 0.25, 4.0 * tail * (1.0 - tail), 1.0 - 4.0 * centre * centre))
    theta = np.arctan2(sin_t, cos_t)
    return np.sqrt(8.0 * np.sin(2.0 * theta / 3.0) * np.sin(theta / 3.0) / cos_t)


def _student_quadrature(tail: float, centre: float, n: float, cfg: OracleConfig) -> float:
    """Positive Student quantile by Newton on the quadrature CDF, bracketed."""
    dist = StudentT(n)
    f = dist.density
    use_tail = tail < 0.25

    def tail_mass(t):
        if t < 1.0:
            s, _ = integrate.quad(f, t, 1.0, epsabs=0.0, epsrel=cfg.quad_tol, limit=200)
            return s + tail_mass(1.0)
        # x = 1/y puts the algebraic tail on the finite interval (0, 1/t]
        g = lambda y: f(1.0 / y) / (y * y) if y > 0.0 else 0.0
        s, _ = integrate.quad(g, 0.0, 1.0 / t, epsabs=0.0, epsrel=cfg.quad_tol, limit=200)
        return s

    def resid(t):
        if use_tail:
            return tail - tail_mass(t)  # increasing in t
        c, _ = integrate.quad(f, 0.0, t, epsabs=0.0, epsrel=cfg.quad_tol, limit=200)
        return c - centre

    if use_tail:
        # leading term of the tail expansion
        w = tail * n * math.sqrt(math.pi) * gamma_ratio_half(n)
        start = math.sqrt(n) * w ** (-1.0 / n)
    else:
        start = float(oracle_normal_quantile(0.5 + centre))
    return _bracketed_newton(resid, f, cfg, start=start, limit=1e300)


def _bracketed_newton(resid, slope, cfg: OracleConfig, start=None, scale: float = 1.0, limit: float = 1e3):
    """Root in [0, inf) of an increasing function with known derivative."""
    lo, hi = 0.0, scale
    if start is not None and start > hi:
        hi = start
    while resid(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > limit * scale or not math.isfinite(hi):
            raise OracleFailure(f"bracket grew past {limit} scale units")
    x = start if start is not None and lo < start < hi else 0.5 * (lo + hi)
    for _ in range(cfg.max_iter):
        r = resid(x)
        if r == 0.0:
            return x
        if r < 0.0:
            lo = x
        else:
            hi = x
        d = slope(x)
        if d > 0.0:
            step = r / d
            if abs(step) <= max(4.0 * _EPS * abs(x), cfg.abs_tol):
                return x - step
            x_new = x - step
        else:
            x_new = 0.5 * (lo + hi)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
            if hi - lo <= 4.0 * _EPS * hi:
                return x_new
        x = x_new
    raise OracleFailure("bracketed Newton did not converge")


def _student_from_parts(tail, centre, sign, n, cfg):
    if n in (1.0, 2.0, 4.0):
        return sign * _student_closed(tail, centre, n)
    vals = [_student_quadrature(float(p), float(c), n, cfg) for p, c in zip(tail, centre)]
    return sign * np.array(vals)


def oracle_student_quantile(u, n: float, config: OracleConfig = DEFAULT_CONFIG):
    """Student t quantile F_n^{-1}(u) (float or array)."""
    if not n > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {n}")
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("probabilities must lie in (0, 1)")
    tail = np.where(u > 0.5, 1.0 - u, u)
    centre = np.abs(u - 0.5)
    t = _student_from_parts(tail, centre, np.sign(u - 0.5), float(n), config)
    return float(t[0]) if scalar else t


def oracle_student_from_gaussian(v, n: float, config: OracleConfig = DEFAULT_CONFIG):
    """F_n^{-1}(Phi(v)): the exact Gaussian-to-Student map.

    Tail and centre masses are formed from erfc and erf of |v| directly, so
    relative accuracy survives deep into either regime.
    """
    if not n > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {n}")
    scalar = np.ndim(v) == 0
    v = np.atleast_1d(np.asarray(v, dtype=float))
    a = np.abs(v)
    tail = _half_erfc(a)
    centre = _half_erf(a)
    t = _student_from_parts(tail, centre, np.sign(v), float(n), config)
    return float(t[0]) if scalar else t


# ---------------------------------------------------------------------------
# Generic distributions


def _side_mass(f, cfg):
    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=cfg.quad_tol, limit=400)
    return val


def oracle_cdf_inverse(
    dist: Distribution,
    u: float,
    config: OracleConfig = DEFAULT_CONFIG,
    *,
    upper_tail: float | None = None,
    scale: float = 1.0,
) -> float:
    """x with CDF(x) = u, the CDF obtained by quadrature of ``dist.density``.

    The masses either side of the anchor 0 are integrated first; the root is
    then sought on the relevant side, integrating from 0 or from infinity,
    whichever keeps the target mass away from cancellation.  ``upper_tail``
    may carry 1 - u exactly when the caller knows it.
    """
    if not 0.0 < u < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {u}")
    right = lambda y: dist.density(y)
    left = lambda y: dist.density(-y)
    m_left = _side_mass(left, config)
    m_right = _side_mass(right, config)
    total = m_left + m_right
    m_left, m_right = m_left / total, m_right / total
    q = (1.0 - u) if upper_tail is None else upper_tail

    if u < m_left:
        side, sign, inner, outer = left, -1.0, m_left - u, u
    elif u > m_left:
        side, sign, inner, outer = right, 1.0, m_right - q, q
    else:
        return 0.0
    g = lambda y: side(y) / total

    if outer < 0.5 * (m_left if sign < 0 else m_right):
        def resid(y):
            s, _ = integrate.quad(g, y, np.inf, epsabs=0.0, epsrel=config.quad_tol, limit=400)
            return outer - s
    else:
        def resid(y):
            s, _ = integrate.quad(g, 0.0, y, epsabs=0.0, epsrel=config.quad_tol, limit=400)
            return s - inner

    return sign * _bracketed_newton(resid, g, config, scale=scale)
