"""Branchless normal quantile kernels in exponential coordinates.

With v = -log(2(1-u)) for u >= 1/2, the upper half of the normal quantile
becomes Q(v) = Phi^{-1}(1 - e^{-v}/2), a smooth slowly growing function on
[0, inf) that a single rational function v P(v)/R(v) fits to high relative
accuracy.  The lower half follows by odd symmetry, folded into the kernels by
sign arithmetic rather than a branch.

Kernels:

* ``q77``: degree (7,7) fit, relative error below 1.06e-9 on 0 <= v <= 37.
* ``icnd_single(u, "f1")``: the same fit as a full quantile in u.
* ``icnd_single(u, "f2")``: a cheaper (5,5) fit, below 4e-7 in double.
* ``icnd_double``: degree (13,13) fit for double precision work.
* ``normal_series_origin``: exact Taylor series of Q about v = 0.
* ``tail_supplement``: asymptotic model for the far tail v >= 37.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np

from .errors import DomainError

__all__ = [
    "RationalKernel",
    "KERNEL_77",
    "KERNEL_55",
    "KERNEL_DOUBLE",
    "q77",
    "icnd_single",
    "icnd_double",
    "normal_series_origin",
    "ORIGIN_SERIES_COEFFS",
    "tail_supplement",
    "TAIL_READINGS",
    "sample_normal_antithetic",
    "normal_quantile_bulk",
    "BULK_KERNELS",
]


@dataclass(frozen=True)
class RationalKernel:
    """v P(v) / R(v) with ascending coefficient lists, R(0) = 1.

    Coefficients are held as 20-digit decimal strings and converted once to binary64 (and binary32 for the single-precision path).
    """

    name: str
    p_digits: tuple[str, ...]
    q_digits: tuple[str, ...]
    domain_v: tuple[float, float]
    error_bound: float

    def __post_init__(self):
        if len(self.p_digits) != len(self.q_digits):
            raise DomainError("numerator and denominator must have equal degree")
        if float(self.q_digits[0]) != 1.0:
            raise DomainError("denominator must be normalised to q_0 = 1")

    @property
    def degree(self) -> int:
        return len(self.p_digits) - 1

    @property
    def p_coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.p_digits])

    @property
    def q_coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.q_digits])

    def numerator(self, v, dtype=np.float64):
        return _horner([dtype(float(c)) for c in self.p_digits], v)

    def denominator(self, v, dtype=np.float64):
        return _horner([dtype(float(c)) for c in self.q_digits], v)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        out = v * self.numerator(v) / self.denominator(v)
        return float(out) if out.ndim == 0 else out

    def min_denominator(self, points: int = 100_001) -> float:
        """Smallest denominator value on a uniform grid over the validated domain."""
        lo, hi = self.domain_v
        return float(np.min(self.denominator(np.linspace(lo, hi, points))))


def _horner(coeffs, x):
    acc = coeffs[-1] + 0 * x
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


KERNEL_77 = RationalKernel(
    "q77",
    (
        "1.2533141359896652729",
        "3.0333178251950406994",
        "2.3884158540184385711",
        "0.73176759583280610539",
        "0.085838533424158257377",
        "0.0034424140686962222423",
        "0.000036313870818023761224",
        "4.3304513840364031401e-8",
    ),
    (
        "1",
        "2.9202373175993672857",
        "2.9373357991677046357",
        "1.2356513216582148689",
        "0.2168237095066675527",
        "0.014494272424798068406",
        "0.00030617264753008793976",
        "1.3141263119543315917e-6",
    ),
    (0.0, 37.0),
    1.06e-9,
)

KERNEL_55 = RationalKernel(
    "icnd_f2",
    (
        "1.2533136835212087879",
        "1.9797154223229267471",
        "0.80002295072483916762",
        "0.087403248265958578062",
        "0.0020751409553756572917",
        "4.744820732427972462e-6",
    ),
    (
        "1.0",
        "2.0795584360534589311",
        "1.2499328117341603014",
        "0.23668431621373705623",
        "0.0120098270559197768",
        "0.00010590620919921025259",
    ),
    (0.0, 37.0),
    4e-7,
)

KERNEL_DOUBLE = RationalKernel(
    "icnd_double",
    (
        "1.2533141373154989811",
        "5.5870183514814983104",
        "9.9373788223105148469",
        "9.11745910783758368",
        "4.6865666928347513004",
        "1.3841649695441184484",
        "0.23434950424605615377",
        "0.022306824510199724768",
        "0.0011538603964070818722",
        "0.000030796620691411567563",
        "3.9115723028719510263e-7",
        "2.0589573468131996933e-9",
        "3.3944224725087481454e-12",
        "7.3936480912071325978e-16",
    ),
    (
        "1.00000000000000000000",
        "4.9577956835689939051",
        "9.9793129245112074476",
        "10.574454910639356539",
        "6.4247521669505779535",
        "2.3008904864351121026",
        "0.48545999687461771635",
        "0.059283082737079006352",
        "0.0040618506206078995821",
        "0.00014919732843986856251",
        "2.7477061392049947066e-6",
        "2.2815008011613816939e-8",
        "7.0445790305953963457e-11",
        "5.1535907808963289678e-14",
    ),
    # u down to about 1e-32 on either side
    (0.0, 73.0),
    1e-13,
)

_SINGLE_KERNELS = {"f1": KERNEL_77, "f2": KERNEL_55}


def q77(v):
    """Upper-half normal quantile in exponential coordinates, v >= 0.

    Accurate to 1.06e-9 relative on [0, 37]; beyond that it degrades slowly
    (about 1e-6 by v = 50 and 2e-5 by v = 74) rather than failing.
    """
    v = np.asarray(v, dtype=float)
    if np.any(~(v >= 0.0)):
        raise DomainError("exponential coordinate must be non-negative")
    return KERNEL_77(v)


def _check_open_unit(u):
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("probabilities must lie in the open interval (0, 1)")


def icnd_single(u, variant: Literal["f1", "f2"] = "f2", precision: Literal["double", "single"] = "double"):
    """Full normal quantile from the single-precision kernels.

    The sign is built arithmetically, sgn = +1 for u >= 1/2 and -1 below,
    and z = -log(1 - sgn (2u - 1)) covers both halves with one expression.
    ``precision="single"`` mimics the float kernels: the log argument is
    formed in double, then the log, the polynomials and the result are
    evaluated in binary32.  Returns float64 for the double path and float32
    for the single path.
    """
    kernel = _SINGLE_KERNELS.get(variant)
    if kernel is None:
        raise DomainError(f"variant must be 'f1' or 'f2', got {variant!r}")
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=np.float32 if precision == "single" else np.float64)
    _check_open_unit(u)
    ud = u.astype(np.float64)
    sgn = (ud >= 0.5).astype(np.int32)
    sgn = sgn - (1 - sgn)
    arg = 1.0 - sgn * (2.0 * ud - 1.0)
    if precision == "single":
        z = -np.log(arg.astype(np.float32))
        out = sgn.astype(np.float32) * z * kernel.numerator(z, np.float32) / kernel.denominator(z, np.float32)
    elif precision == "double":
        z = -np.log(arg)
        out = sgn * z * kernel.numerator(z) / kernel.denominator(z)
    else:
        raise DomainError(f"precision must be 'double' or 'single', got {precision!r}")
    return out.item() if scalar else out


def icnd_double(u):
    """Double-precision normal quantile, relative error near 1e-15 for u in [1e-32, 1 - 1e-16].

    vv is the smaller of u and 1 - u, selected arithmetically; z = -log(2 vv).
    Near u = 1 the subtraction 1 - u carries the rounding of u itself, so for
    deep upper-tail accuracy pass the complementary probability and negate.
    """
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    _check_open_unit(u)
    sgn = (u >= 0.5).astype(np.int32)
    sgn = sgn - (1 - sgn)
    vv = np.where(sgn == -1, u, 1.0 - u)
    z = -np.log(2.0 * vv)
    out = sgn * z * KERNEL_DOUBLE.numerator(z) / KERNEL_DOUBLE.denominator(z)
    return out.item() if scalar else out


# ---------------------------------------------------------------------------
# Taylor series about v = 0
#
# The coefficient of v^k is sign * (sum_j a_j pi^(j + 1/2)) / (D sqrt 2).

_ORIGIN_SERIES_EXACT = (
    (+1, (1,), 1),
    (-1, (1,), 2),
    (+1, (2, 1), 12),
    (-1, (1, 3), 24),
    (+1, (4, 50, 7), 480),
    (-1, (4, 180, 105), 2880),
    (+1, (8, 1204, 1960, 127), 40320),
    (-1, (2, 966, 3675, 889), 80640),
    (+1, (16, 24200, 194628, 117348, 4369), 5806080),
    (-1, (16, 74640, 1190700, 1493520, 196605), 58060800),
)


def _origin_coefficients() -> tuple[float, ...]:
    with mpmath.workdps(30):
        out = []
        for sign, weights, denom in _ORIGIN_SERIES_EXACT:
            num = sum(w * mpmath.pi ** (j + mpmath.mpf(1) / 2) for j, w in enumerate(weights))
            out.append(float(sign * num / (denom * mpmath.sqrt(2))))
    return tuple(out)


ORIGIN_SERIES_COEFFS = _origin_coefficients()


def normal_series_origin(v, terms: int = 10):
    """Partial sum through v^terms of the exact series of Q(v) about v = 0.

    The series is asymptotic in character; ten terms hold about 1e-10
    relative accuracy for |v| <= 0.1.
    """
    if not 1 <= terms <= len(ORIGIN_SERIES_COEFFS):
        raise DomainError(f"terms must lie in [1, {len(ORIGIN_SERIES_COEFFS)}], got {terms}")
    v = np.asarray(v, dtype=float)
    out = v * _horner(list(ORIGIN_SERIES_COEFFS[:terms]), v)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Far tail

TAIL_READINGS = ("linear", "nested_log", "log_2pi")
TAIL_MIN_V = 37.0
_HALF_LOG_PI = 0.5 * math.log(math.pi)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _tail_q(a, b, groups: int):
    """q(a, b) = a - b/2 + sum of the 1/a^k groups, k = 1..groups."""
    terms = (
        (b / 4.0 - 0.5),
        (b * b - 6.0 * b + 14.0) / 16.0,
        (((2.0 * b - 21.0) * b + 102.0) * b - 214.0) / 96.0,
        ((((3.0 * b - 46.0) * b + 348.0) * b - 1488.0) * b + 2978.0) / 384.0,
    )
    inv = 1.0 / a
    acc = 0.0 * a
    for t in reversed(terms[:groups]):
        acc = (acc + t) * inv
    return a - 0.5 * b + acc


def tail_supplement(v, reading: str = "linear", groups: int = 4):
    """Q(v) = sqrt(2 q(a, b)) for v >= 37, with b = log a.

    ``reading`` picks the definition of a:

    * ``"linear"`` (default): a = v - log(pi)/2.  Matching the Gaussian tail
      e^{-v}/2 = phi(z)/z (1 - 1/z^2 + ...) with q = z^2/2 gives
      v = q + log(q)/2 + log(pi)/2 + O(1/q), which this reading inverts.
    * ``"nested_log"``: a = log(v - log(pi)/2), with an extra log.
    * ``"log_2pi"``: a = v - log(2 pi)/2, the variant with 2 pi.

    Only the first is accurate; the other two are kept so their errors can
    be reported side by side.  ``groups`` (1 to 4) truncates the 1/a series.
    """
    if reading not in TAIL_READINGS:
        raise DomainError(f"reading must be one of {TAIL_READINGS}, got {reading!r}")
    if not 1 <= groups <= 4:
        raise DomainError(f"groups must lie in [1, 4], got {groups}")
    v = np.asarray(v, dtype=float)
    if np.any(~(v >= TAIL_MIN_V)):
        raise DomainError(f"tail model is validated for v >= {TAIL_MIN_V} only")
    if reading == "linear":
        a = v - _HALF_LOG_PI
    elif reading == "nested_log":
        a = np.log(v - _HALF_LOG_PI)
    else:
        a = v - _HALF_LOG_2PI
    out = np.sqrt(2.0 * _tail_q(a, np.log(a), groups))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Sampling and bulk evaluation


def sample_normal_antithetic(u, path: Literal["q77", "double"] = "q77"):
    """Antithetic normal pair (z, -z) from a uniform u in (0, 1).

    Uses the reflected coordinate v = -log(u), so u near 1 gives v near 0
    without cancellation.  ``path="double"`` evaluates the same quantile,
    Phi^{-1}(1 - u/2), with the double-precision kernel.
    """
    u = np.asarray(u, dtype=float)
    _check_open_unit(u)
    if path == "q77":
        z = KERNEL_77(-np.log(u))
    elif path == "double":
        z = -icnd_double(0.5 * u)
    else:
        raise DomainError(f"path must be 'q77' or 'double', got {path!r}")
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        return float(z), float(-z)
    return z, -z


def _q77_full(u):
    """q77 as a full quantile in u, by the same sign arithmetic as icnd_single."""
    sgn = (u >= 0.5).astype(np.int32)
    sgn = sgn - (1 - sgn)
    z = -np.log(1.0 - sgn * (2.0 * u - 1.0))
    return sgn * KERNEL_77(z)


BULK_KERNELS = {
    "icnd_double": icnd_double,
    "icnd_f1": lambda u: icnd_single(u, "f1"),
    "icnd_f2": lambda u: icnd_single(u, "f2"),
    "icnd_f1_single": lambda u: icnd_single(u, "f1", "single"),
    "icnd_f2_single": lambda u: icnd_single(u, "f2", "single"),
    "q77": _q77_full,
}


def normal_quantile_bulk(u: np.ndarray, kernel: str = "icnd_double", out: np.ndarray | None = None) -> np.ndarray:
    """Map a contiguous array of probabilities to normal quantiles.

    ``out`` may be a preallocated array (including ``u`` itself for in-place
    use); its dtype must hold the kernel's result.
    """
    fn = BULK_KERNELS.get(kernel)
    if fn is None:
        raise DomainError(f"unknown kernel {kernel!r}; choose from {sorted(BULK_KERNELS)}")
    u = np.ascontiguousarray(u)
    if kernel in ("icnd_f1_single", "icnd_f2_single"):
        u = u.astype(np.float32, copy=False)
    else:
        u = u.astype(np.float64, copy=False)
    _check_open_unit(u)
    res = fn(u)
    if out is None:
        return np.asarray(res)
    out[...] = res
    return out
