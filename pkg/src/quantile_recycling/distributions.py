"""Densities and H-functions for the base and target distributions.

The H-function of a density f is ``H(x) = -d/dx log f(x)``.  It is the only
information about a distribution that the recycling ODE needs, so every
distribution here exposes ``h`` alongside ``density``.  CDFs and quantiles are
provided only where they are elementary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import AccuracyError, DomainError, UnsupportedError
from .special import (
    DEFAULT_ACCURACY,
    Accuracy,
    bessel_k_ratio,
    bessel_k_scaled,
    erfc,
    gamma_ratio_half,
    hyp2f1,
)

__all__ = [
    "Distribution",
    "Normal",
    "Exponential",
    "TwoSidedExponential",
    "StudentT",
    "HyperbolicParams",
    "Hyperbolic",
    "VGParams",
    "VarianceGamma",
    "normal_h",
    "exponential_h",
    "student_h",
    "hyperbolic_h",
    "vg_h",
    "hyperbolic_split",
    "vg_split",
    "two_sided_exp_quantile",
]

FULL_LINE = "full line"
HALF_LINE = "half line"
SPLIT_AT_ZERO = "split at 0"

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Distribution:
    """A univariate continuous distribution as seen by the recycling ODE.

    Subclasses implement ``density`` and ``h``; ``cdf``, ``sf`` and
    ``base_quantile`` are optional and raise ``NotImplementedError`` when the
    distribution has no elementary form for them.
    """

    support = FULL_LINE

    def density(self, x: float) -> float:
        raise NotImplementedError

    def h(self, x: float) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def sf(self, x: float) -> float:
        return 1.0 - self.cdf(x)

    def base_quantile(self, u: float) -> float:
        raise NotImplementedError

    @property
    def has_cdf(self) -> bool:
        return type(self).cdf is not Distribution.cdf


# ---------------------------------------------------------------------------
# H-functions as plain functions


def normal_h(v: float) -> float:
    return v


def exponential_h(v: float) -> float:
    return 1.0


def student_h(q: float, n: float) -> float:
    return (1.0 + 1.0 / n) * q / (1.0 + q * q / n)


def hyperbolic_h(x: float, p: "HyperbolicParams") -> float:
    return p.alpha * x / math.hypot(p.delta, x) - p.beta


def vg_h(x: float, p: "VGParams") -> float:
    """H-function of the variance gamma density, lambda >= 1.

    At ``lam == 1`` the density is the two-sided exponential and H is the
    constant ``alpha - beta`` for x > 0 and ``-(alpha + beta)`` for x < 0; the
    origin is then a jump and raises :class:`DomainError`.  For ``lam > 1`` H is
    continuous through the origin with value ``-beta`` there.
    """
    p.require_supported()
    if p.lam == 1.0:
        if x > 0.0:
            return p.alpha - p.beta
        if x < 0.0:
            return -(p.alpha + p.beta)
        raise DomainError("vg_h is discontinuous at x = 0 when lambda = 1")
    if x == 0.0:
        return -p.beta
    ax = p.alpha * abs(x)
    ratio = bessel_k_ratio(p.lam - 1.5, p.lam - 0.5, ax)
    return math.copysign(p.alpha * ratio, x) - p.beta


# ---------------------------------------------------------------------------
# Base distributions


@dataclass(frozen=True)
class Normal(Distribution):
    """Standard normal."""

    def density(self, x):
        return math.exp(-0.5 * x * x - _LOG_SQRT_2PI)

    def h(self, x):
        return normal_h(x)

    def cdf(self, x):
        return 0.5 * erfc(-x / math.sqrt(2.0))

    def sf(self, x):
        return 0.5 * erfc(x / math.sqrt(2.0))


@dataclass(frozen=True)
class Exponential(Distribution):
    """One-sided exponential with the given rate."""

    rate: float = 1.0
    support = HALF_LINE

    def __post_init__(self):
        if not self.rate > 0.0:
            raise DomainError(f"rate must be positive, got {self.rate}")

    def density(self, x):
        return self.rate * math.exp(-self.rate * x) if x >= 0.0 else 0.0

    def h(self, x):
        return self.rate * exponential_h(x)

    def cdf(self, x):
        return -math.expm1(-self.rate * x) if x > 0.0 else 0.0

    def sf(self, x):
        return math.exp(-self.rate * x) if x > 0.0 else 1.0

    def base_quantile(self, u):
        if not 0.0 < u < 1.0:
            raise DomainError(f"probability must lie in (0, 1), got {u}")
        return -math.log1p(-u) / self.rate


@dataclass(frozen=True)
class TwoSidedExponential(Distribution):
    """Piecewise exponential density with mass ``p_minus`` left of zero.

    ``rate_right`` is the decay rate for x > 0 (alpha - beta for the targets
    here) and ``rate_left`` the rate for x < 0 (alpha + beta).
    """

    p_minus: float
    p_plus: float
    rate_left: float
    rate_right: float
    support = SPLIT_AT_ZERO

    def __post_init__(self):
        if abs(self.p_minus + self.p_plus - 1.0) > 1e-12:
            raise DomainError(f"p_minus + p_plus must be 1, got {self.p_minus + self.p_plus!r}")
        if not (0.0 < self.p_minus < 1.0):
            raise DomainError(f"p_minus must lie in (0, 1), got {self.p_minus}")
        if not (self.rate_left > 0.0 and self.rate_right > 0.0):
            raise DomainError("both exponential rates must be positive")

    @classmethod
    def matching(cls, alpha: float, beta: float, p_plus: float, p_minus: float | None = None):
        """Base with the tail rates of a target with parameters (alpha, beta)."""
        if p_minus is None:
            p_minus = 1.0 - p_plus
        return cls(p_minus=p_minus, p_plus=p_plus, rate_left=alpha + beta, rate_right=alpha - beta)

    def density(self, x):
        if x > 0.0:
            return self.p_plus * self.rate_right * math.exp(-self.rate_right * x)
        if x < 0.0:
            return self.p_minus * self.rate_left * math.exp(self.rate_left * x)
        return 0.5 * (self.p_plus * self.rate_right + self.p_minus * self.rate_left)

    def h(self, x):
        if x > 0.0:
            return self.rate_right
        if x < 0.0:
            return -self.rate_left
        raise DomainError("two-sided exponential H-function is discontinuous at 0")

    def cdf(self, x):
        if x >= 0.0:
            return 1.0 - self.p_plus * math.exp(-self.rate_right * x)
        return self.p_minus * math.exp(self.rate_left * x)

    def sf(self, x):
        if x >= 0.0:
            return self.p_plus * math.exp(-self.rate_right * x)
        return 1.0 - self.p_minus * math.exp(self.rate_left * x)

    def base_quantile(self, u):
        return two_sided_exp_quantile(u, self)


def two_sided_exp_quantile(u: float, t: TwoSidedExponential) -> float:
    """Inverse CDF of a two-sided exponential (exact, with one branch per side)."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {u}")
    if u < t.p_minus:
        return math.log(u / t.p_minus) / t.rate_left
    if u > t.p_minus:
        return -math.log((1.0 - u) / t.p_plus) / t.rate_right
    return 0.0


# ---------------------------------------------------------------------------
# Targets


@dataclass(frozen=True)
class StudentT(Distribution):
    """Student t with ``n`` degrees of freedom (density and H only)."""

    n: float

    def __post_init__(self):
        if not self.n > 0.0:
            raise DomainError(f"degrees of freedom must be positive, got {self.n}")

    @property
    def log_norm(self) -> float:
        return -math.log(gamma_ratio_half(self.n)) - 0.5 * math.log(self.n * math.pi)

    def density(self, x):
        n = self.n
        return math.exp(self.log_norm - 0.5 * (n + 1.0) * math.log1p(x * x / n))

    def h(self, x):
        return student_h(x, self.n)


@dataclass(frozen=True)
class HyperbolicParams:
    alpha: float
    beta: float
    delta: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not abs(self.beta) < self.alpha:
            raise DomainError(f"|beta| must be below alpha, got beta={self.beta}")
        if not self.delta > 0.0:
            raise DomainError(f"delta must be positive, got {self.delta}")

    @property
    def gamma_h(self) -> float:
        return math.sqrt((self.alpha - self.beta) * (self.alpha + self.beta))


@dataclass(frozen=True)
class Hyperbolic(Distribution):
    """Hyperbolic distribution with location fixed at zero."""

    params: HyperbolicParams

    @property
    def log_norm(self) -> float:
        p = self.params
        g = p.gamma_h
        # log of gamma / (2 alpha delta K1(delta gamma)), with K1 kept scaled
        return math.log(g / (2.0 * p.alpha * p.delta * bessel_k_scaled(1.0, p.delta * g))) + p.delta * g

    def density(self, x):
        p = self.params
        return math.exp(self.log_norm - p.alpha * math.hypot(p.delta, x) + p.beta * x)

    def h(self, x):
        return hyperbolic_h(x, self.params)

    def split(self, acc: Accuracy = DEFAULT_ACCURACY) -> TwoSidedExponential:
        return hyperbolic_split(self.params, acc)


@dataclass(frozen=True)
class VGParams:
    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if not self.alpha > 0.0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not abs(self.beta) < self.alpha:
            raise DomainError(f"|beta| must be below alpha, got beta={self.beta}")

    def require_supported(self):
        if self.lam < 1.0:
            raise UnsupportedError("variance gamma with lambda < 1 has a singular origin; not supported")


@dataclass(frozen=True)
class VarianceGamma(Distribution):
    """Variance gamma density (Bessel-K form, location zero), lambda >= 1."""

    params: VGParams

    def __post_init__(self):
        self.params.require_supported()

    @property
    def log_norm(self) -> float:
        p = self.params
        return (
            p.lam * math.log((p.alpha - p.beta) * (p.alpha + p.beta))
            - (p.lam - 0.5) * math.log(2.0 * p.alpha)
            - 0.5 * math.log(math.pi)
            - math.lgamma(p.lam)
        )

    def density(self, x):
        p = self.params
        if x == 0.0:
            return self.density_at_origin()
        ax = p.alpha * abs(x)
        log_k = math.log(bessel_k_scaled(p.lam - 0.5, ax)) - ax
        return math.exp(self.log_norm + p.beta * x + (p.lam - 0.5) * math.log(abs(x)) + log_k)

    def density_at_origin(self) -> float:
        """Limit of the density at 0, using |x|^nu K_nu(a|x|) -> Gamma(nu) 2^(nu-1) a^-nu."""
        p = self.params
        nu = p.lam - 0.5
        return math.exp(
            self.log_norm + math.lgamma(nu) + (nu - 1.0) * math.log(2.0) - nu * math.log(p.alpha)
        )

    def h(self, x):
        return vg_h(x, self.params)

    def h_right(self, x):
        """H on the closed right half-line (origin taken as the right limit)."""
        if x == 0.0 and self.params.lam == 1.0:
            return self.params.alpha - self.params.beta
        return vg_h(x, self.params)

    def h_left(self, x):
        """H on the closed left half-line (origin taken as the left limit)."""
        if x == 0.0 and self.params.lam == 1.0:
            return -(self.params.alpha + self.params.beta)
        return vg_h(x, self.params)

    def split(self) -> TwoSidedExponential:
        return vg_split(self.params)


# ---------------------------------------------------------------------------
# Probability splits


def _half_line_mass(density, sign: float, cutoff: float, scale: float, acc: Accuracy) -> float:
    f = lambda x: density(sign * x)
    pieces = [0.0]
    # breakpoints at the density's natural scale help QUADPACK on narrow peaks
    for b in (scale, 4.0 * scale, 16.0 * scale):
        if b < cutoff:
            pieces.append(b)
    pieces.append(cutoff)
    total = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=acc.rel_tol, limit=200)
        if err > 100.0 * acc.rel_tol * max(abs(val), 1e-300):
            raise AccuracyError(f"quadrature error estimate {err:g} too large on [{lo}, {hi}]")
        total += val
    edge = f(cutoff)
    if edge > acc.rel_tol * total:
        raise AccuracyError(f"density not negligible at truncation point {cutoff}")
    return total


def hyperbolic_split(p: HyperbolicParams, acc: Accuracy = DEFAULT_ACCURACY) -> TwoSidedExponential:
    """Mass on each side of zero, by adaptive quadrature of the density."""
    dist = Hyperbolic(p)
    cutoff = 50.0 / (p.alpha - abs(p.beta)) + p.delta
    scale = max(p.delta, 1.0 / p.alpha)
    p_plus = _half_line_mass(dist.density, 1.0, cutoff, scale, acc)
    p_minus = _half_line_mass(dist.density, -1.0, cutoff, scale, acc)
    total = p_plus + p_minus
    if abs(total - 1.0) > 1e-10:
        raise AccuracyError(f"hyperbolic density integrates to {total!r}")
    return TwoSidedExponential.matching(p.alpha, p.beta, p_plus / total, p_minus / total)


def vg_split(p: VGParams) -> TwoSidedExponential:
    """Mass on each side of zero from the closed forms in 2F1.

    After a Pfaff transformation the hypergeometric argument is
    (alpha +- beta) / (2 alpha), which lies in (0, 1) for every admissible beta.
    """
    p.require_supported()
    lam, a, b = p.lam, p.alpha, p.beta
    pref = math.exp(
        (2.0 * lam - 1.0) * math.log(2.0)
        + math.lgamma(lam + 0.5)
        - 0.5 * math.log(math.pi)
        - math.lgamma(lam + 1.0)
    )
    z_plus = (a + b) / (b - a)
    z_minus = (b - a) / (a + b)
    p_plus = pref * ((a + b) / (a - b)) ** lam * hyp2f1(2.0 * lam, lam, lam + 1.0, z_plus)
    p_minus = pref * ((a - b) / (a + b)) ** lam * hyp2f1(2.0 * lam, lam, lam + 1.0, z_minus)
    total = p_plus + p_minus
    if abs(total - 1.0) > 1e-10:
        raise AccuracyError(f"variance gamma split sums to {total!r}")
    return TwoSidedExponential.matching(a, b, p_plus / total, p_minus / total)
