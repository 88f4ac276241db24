"""Analytic map from Gaussian to Student t variates.

Near the centre the map is an odd power series Q(v) = sum c_k v^(2k+1),
whose coefficients follow from the recycling ODE by a cubic convolution
recurrence.  In the tails it is the leading terms of the Student quantile's
tail series composed with w = 1 - Phi(v).  The two are switched at a
crossover point, fixed for n = 4 and calibrated against the reference
quantile for other n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import CoefficientOverflowError, DomainError
from .special import erfc, gamma_ratio_half

__all__ = [
    "StudentCentralSeries",
    "StudentTailModel",
    "StudentMapConfig",
    "student_gamma",
    "central_coefficients",
    "central_eval",
    "tail_model",
    "tail_eval",
    "calibrate_crossover",
    "student_quantile_from_gaussian",
    "N4_COEFFICIENTS",
    "N4_CROSSOVER",
]

MAX_ORDER = 64
_WORK_DIGITS = 40

# Reference central coefficients c_0..c_10 for n = 4, to 18 digits.
N4_COEFFICIENTS = (
    1.06384608107048714,
    0.0735313753642658509,
    0.00408737916150927847,
    0.000157376276663230562,
    4.31939824140363509e-6,
    9.56881464639227278e-8,
    2.09256881803614446e-9,
    3.87962938209093352e-11,
    2.72326084541915671e-13,
    2.90528930162373328e-15,
    4.59490133995901375e-16,
)
N4_CROSSOVER = 3.93473


def student_gamma(n: float) -> float:
    """Q'(0) for the Gaussian-to-Student map: sqrt(n/2) Gamma(n/2) / Gamma((n+1)/2)."""
    if not n > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {n}")
    return math.sqrt(0.5 * n) * gamma_ratio_half(n)


@dataclass(frozen=True)
class StudentCentralSeries:
    """Odd power series Q(v) = sum_{k<=K} c_k v^(2k+1)."""

    n: float
    coeffs: tuple[float, ...]

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class StudentTailModel:
    """Q(v) ~ d (1 - Phi(v))^(-1/n), optionally with the second tail term."""

    n: float
    d: float
    terms: int = 2

    def __post_init__(self):
        if not self.d > 0.0:
            raise DomainError(f"tail constant must be positive, got {self.d}")
        if self.terms not in (1, 2):
            raise DomainError(f"tail model uses one or two terms, got {self.terms}")


@lru_cache(maxsize=None)
def _coefficients_mp(n: float, K: int) -> tuple:
    with mpmath.workdps(_WORK_DIGITS):
        nn = mpmath.mpf(n)
        gamma = mpmath.sqrt(nn / 2) * mpmath.gamma(nn / 2) / mpmath.gamma((nn + 1) / 2)
        inv_n = 1 / nn

        def a_lm(l, m):
            return (1 + inv_n) * (2 * l + 1) * (2 * m + 1) - 2 * inv_n * m * (2 * m + 1)

        c = [gamma]
        for i in range(K):
            rhs = -(2 * i + 1) * c[i]
            for l in range(i + 1):
                for m in range(i - l + 1):
                    rhs += a_lm(l, m) * c[i - l - m] * c[l] * c[m]
            if i >= 1:
                extra = mpmath.mpf(0)
                for l in range(i):
                    for m in range(i - l):
                        extra += (2 * m + 1) * c[i - 1 - l - m] * c[l] * c[m]
                rhs -= extra * inv_n
            c.append(rhs / ((2 * i + 3) * (2 * i + 2)))
        return tuple(c)


def central_coefficients(n: float, K: int = 10) -> StudentCentralSeries:
    """Coefficients c_0..c_K of the central series, from the exact recurrence.

    The recurrence is run in 40-digit arithmetic and rounded once, so every
    coefficient is correctly rounded up to the last bit or so.
    """
    if not n > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {n}")
    if not 0 <= K <= MAX_ORDER:
        raise DomainError(f"series order must lie in [0, {MAX_ORDER}], got {K}")
    coeffs = tuple(float(c) for c in _coefficients_mp(float(n), int(K)))
    if not all(math.isfinite(c) for c in coeffs):
        raise CoefficientOverflowError(f"central coefficients overflow for n={n}, K={K}")
    return StudentCentralSeries(float(n), coeffs)


def central_eval(s: StudentCentralSeries, v):
    """Horner evaluation in y = v^2, times v.  Exactly odd in v."""
    v = np.asarray(v, dtype=float)
    y = v * v
    acc = np.full_like(v, s.coeffs[-1])
    for c in reversed(s.coeffs[:-1]):
        acc = acc * y + c
    out = v * acc
    return float(out) if out.ndim == 0 else out


def _tail_scale(n: float) -> float:
    """n sqrt(pi) Gamma(n/2) / Gamma((n+1)/2), which turns 1 - Phi into w."""
    return n * math.sqrt(math.pi) * gamma_ratio_half(n)


def tail_model(n: float, terms: int = 2) -> StudentTailModel:
    if not n > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {n}")
    return StudentTailModel(float(n), math.sqrt(n) * _tail_scale(n) ** (-1.0 / n), terms)


def tail_eval(m: StudentTailModel, v):
    """Tail model for v > 0: sqrt(n) w^(-1/n) (1 - (n+1)/(2(n+2)) w^(2/n)).

    Here w = (1 - Phi(v)) n sqrt(pi) Gamma(n/2) / Gamma((n+1)/2), with
    1 - Phi(v) = erfc(v / sqrt(2)) / 2.  With ``terms=1`` the bracket is
    dropped, leaving d (1 - Phi(v))^(-1/n).
    """
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0.0)):
        raise DomainError("tail model is defined for v > 0 only")
    n = m.n
    tail = 0.5 * erfc(v / math.sqrt(2.0))
    if m.terms == 1:
        out = m.d * tail ** (-1.0 / n)
    else:
        w = tail * _tail_scale(n)
        out = math.sqrt(n) * w ** (-1.0 / n) * (1.0 - (n + 1.0) / (2.0 * (n + 2.0)) * w ** (2.0 / n))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Composite map


@dataclass(frozen=True)
class StudentMapConfig:
    """Central series of order K below the crossover, tail model above it."""

    n: float = 4.0
    K: int = 10
    crossover: float = N4_CROSSOVER
    tail_terms: int = 2

    def __post_init__(self):
        if not self.crossover > 0.0:
            raise DomainError(f"crossover must be positive, got {self.crossover}")

    @classmethod
    def for_n(cls, n: float, K: int = 10, tail_terms: int = 2) -> "StudentMapConfig":
        """Configuration for any n; the crossover is calibrated unless (n, K) = (4, 10)."""
        if float(n) == 4.0 and K == 10 and tail_terms == 2:
            return cls()
        return cls(float(n), K, calibrate_crossover(float(n), K, tail_terms), tail_terms)


@lru_cache(maxsize=None)
def _parts(n: float, K: int, tail_terms: int):
    return central_coefficients(n, K), tail_model(n, tail_terms)


@lru_cache(maxsize=None)
def calibrate_crossover(n: float, K: int = 10, tail_terms: int = 2, points: int = 400, v_hi: float = 12.0) -> float:
    """Crossover minimising the larger of the two branch errors on a grid.

    Each branch is compared with the reference quantile on ``points`` nodes in
    (0, v_hi]; the crossover is the node where the running maximum of the
    central error (from the left) and of the tail error (from the right)
    balance best.  Cached per (n, K, tail_terms).
    """
    from .oracle import oracle_student_from_gaussian

    series, tail = _parts(n, K, tail_terms)
    v = np.linspace(v_hi / points, v_hi, points)
    exact = oracle_student_from_gaussian(v, n)
    with np.errstate(over="ignore", invalid="ignore"):
        e_central = np.abs(central_eval(series, v) / exact - 1.0)
        e_tail = np.abs(tail_eval(tail, v) / exact - 1.0)
    e_central = np.where(np.isfinite(e_central), e_central, np.inf)
    e_tail = np.where(np.isfinite(e_tail), e_tail, np.inf)
    left_max = np.maximum.accumulate(e_central)
    right_max = np.maximum.accumulate(e_tail[::-1])[::-1]
    return float(v[np.argmin(np.maximum(left_max, right_max))])


def student_quantile_from_gaussian(v, n: float = 4.0, config: StudentMapConfig | None = None):
    """Map Gaussian variates v to Student t_n variates.

    Uses the central series for |v| below the crossover and the two-term tail
    model beyond it, reflecting for negative v.  Accepts floats or arrays.
    """
    if config is None:
        config = StudentMapConfig.for_n(n)
    elif config.n != float(n):
        raise DomainError(f"config is for n={config.n}, not n={n}")
    series, tail = _parts(config.n, config.K, config.tail_terms)
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    central = a < config.crossover
    out = np.empty(a.shape)
    out[central] = central_eval(series, a[central])
    if np.any(~central):
        out[~central] = tail_eval(tail, a[~central])
    out = np.copysign(out, v)
    return float(out) if out.ndim == 0 else out
