"""Numerical solution of the recycling ODE.

A quantile map Q taking base variates v to target variates satisfies

    Q'' + Hb(v) Q' = Ht(Q) Q'^2,

where Hb and Ht are the H-functions (minus log-density derivatives) of the
base and target.  Given Q and Q' at one point, a fixed-step explicit
Runge-Kutta scheme carries the pair (Q, Q') along the base axis.  The result
is a :class:`QuantileMap`, interpolated by cubic Hermite splines through the
stored (Q, Q') nodes.

Problems that run to the left of their start point are solved on the mirror
image.  With R(s) = -Q(-s) the equation keeps its form,

    R'' + Hb_m(s) R' = Ht_m(R) R'^2,   Hb_m(s) = -Hb(-s),  Ht_m(r) = -Ht(-r),

so a single forward integrator covers both directions.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .distributions import (
    HyperbolicParams,
    TwoSidedExponential,
    VarianceGamma,
    VGParams,
    hyperbolic_h,
    normal_h,
    student_h,
)
from .errors import DomainError, MonotonicityError, SolverOverflowError
from .special import bessel_k_scaled, gamma_ratio_half

__all__ = [
    "RecyclingProblem",
    "QuantileMap",
    "TwoSidedMap",
    "rode_rhs",
    "solve_rode",
    "solve_two_sided",
    "build_hyperbolic_problems",
    "build_vg_problems",
    "gaussian_to_student_problems",
    "exponential_to_normal_problem",
    "identity_problem",
]

HFunction = Callable[[float], float]
Direction = Literal["left", "right"]
Order = Literal["rk4", "rk6"]
Precision = Literal["double", "extended"]

DEFAULT_STEP = 1e-3
BLOWUP_GUARD = 1e12


@dataclass(frozen=True)
class RecyclingProblem:
    """Initial value problem for one side of a quantile map.

    The solve covers ``[v0, v0 + v_max]`` for ``direction="right"`` and
    ``[v0 - v_max, v0]`` for ``direction="left"``.  ``slope0`` is Q'(v0).
    """

    base_h: HFunction
    target_h: HFunction
    v0: float
    q0: float
    slope0: float
    direction: Direction
    v_max: float

    def __post_init__(self):
        if not self.slope0 > 0.0:
            raise DomainError(f"initial slope must be positive, got {self.slope0}")
        if not self.v_max > 0.0:
            raise DomainError(f"solve extent must be positive, got {self.v_max}")
        if self.direction not in ("left", "right"):
            raise DomainError(f"direction must be 'left' or 'right', got {self.direction!r}")

    def mirrored(self) -> "RecyclingProblem":
        """The equivalent right-running problem for R(s) = -Q(-s)."""
        bh, th = self.base_h, self.target_h
        return RecyclingProblem(
            base_h=lambda s: -bh(-s),
            target_h=lambda r: -th(-r),
            v0=-self.v0,
            q0=-self.q0,
            slope0=self.slope0,
            direction="right",
            v_max=self.v_max,
        )


def _hermite_monotone(v, q, dq) -> bool:
    """Exact monotonicity test for each cubic Hermite segment."""
    secant = np.diff(q) / np.diff(v)
    if np.any(secant <= 0.0):
        return False
    a = dq[:-1] / secant
    b = dq[1:] / secant
    if np.any(a < 0.0) or np.any(b < 0.0):
        return False
    # Fritsch-Carlson: monotone inside the circle of radius 3, or where the
    # derivative's interior minimum stays non-negative.
    inside = a * a + b * b <= 9.0
    s = a + b - 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = a - (2.0 * a + b - 3.0) ** 2 / (3.0 * s)
    ok = inside | (s <= 0.0) | (2.0 * a + b - 3.0 <= 0.0) | (a + 2.0 * b - 3.0 <= 0.0) | (phi >= 0.0)
    return bool(np.all(ok))


@dataclass(frozen=True)
class QuantileMap:
    """Monotone map v -> Q(v) on a grid, with cubic Hermite dense output.

    Each Hermite segment is evaluated relative to one of its end nodes, which
    keeps relative accuracy next to that node.  ``reflect=True`` builds the
    spline in the mirrored coordinate -v, so the anchoring node is the right
    end; left-running solves use it so that values near their start point
    (typically Q(0) = 0) stay accurate relative to Q itself.
    """

    grid_v: np.ndarray
    grid_q: np.ndarray
    grid_dq: np.ndarray
    reflect: bool = False
    _spline: CubicHermiteSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.grid_v, dtype=float)
        q = np.asarray(self.grid_q, dtype=float)
        dq = np.asarray(self.grid_dq, dtype=float)
        if not (v.ndim == 1 and v.shape == q.shape == dq.shape and v.size >= 2):
            raise DomainError("grids must be one-dimensional, equally long and hold at least two nodes")
        if np.any(np.diff(v) <= 0.0):
            raise DomainError("grid_v must be strictly increasing")
        if np.any(np.diff(q) <= 0.0) or np.any(dq <= 0.0):
            raise MonotonicityError("quantile map is not strictly increasing on its grid")
        if not _hermite_monotone(v, q, dq):
            raise MonotonicityError("Hermite interpolant is not monotone between nodes")
        for arr in (v, q, dq):
            arr.setflags(write=False)
        object.__setattr__(self, "grid_v", v)
        object.__setattr__(self, "grid_q", q)
        object.__setattr__(self, "grid_dq", dq)
        if self.reflect:
            spline = CubicHermiteSpline(-v[::-1], -q[::-1], dq[::-1], extrapolate=False)
        else:
            spline = CubicHermiteSpline(v, q, dq, extrapolate=False)
        object.__setattr__(self, "_spline", spline)

    @property
    def v_range(self) -> tuple[float, float]:
        return float(self.grid_v[0]), float(self.grid_v[-1])

    def _check(self, v):
        lo, hi = self.v_range
        if np.any(~((v >= lo) & (v <= hi))):
            raise DomainError(f"evaluation outside the solved range [{lo}, {hi}]")

    def __call__(self, v):
        arr = np.asarray(v, dtype=float)
        self._check(arr)
        out = -self._spline(-arr) if self.reflect else self._spline(arr)
        return float(out) if out.ndim == 0 else out

    def derivative(self, v):
        arr = np.asarray(v, dtype=float)
        self._check(arr)
        out = self._spline(-arr, 1) if self.reflect else self._spline(arr, 1)
        return float(out) if out.ndim == 0 else out

    def join(self, other: "QuantileMap") -> "TwoSidedMap":
        """Attach a map whose grid starts where this one ends."""
        return TwoSidedMap(self, other)


@dataclass(frozen=True)
class TwoSidedMap:
    """Two quantile maps sharing one node, where Q' may jump.

    The split bases used for hyperbolic and variance gamma targets put
    different one-sided slopes on either side of the origin, so the joined
    map is continuous but only piecewise smooth.
    """

    left: QuantileMap
    right: QuantileMap

    def __post_init__(self):
        if self.right.grid_v[0] != self.left.grid_v[-1] or self.right.grid_q[0] != self.left.grid_q[-1]:
            raise DomainError("maps do not share an end node")

    @property
    def v_range(self) -> tuple[float, float]:
        return self.left.v_range[0], self.right.v_range[1]

    @property
    def grid_v(self) -> np.ndarray:
        return np.concatenate([self.left.grid_v, self.right.grid_v[1:]])

    @property
    def grid_q(self) -> np.ndarray:
        return np.concatenate([self.left.grid_q, self.right.grid_q[1:]])

    def _eval(self, v, method):
        arr = np.asarray(v, dtype=float)
        lo, hi = self.v_range
        if np.any(~((arr >= lo) & (arr <= hi))):
            raise DomainError(f"evaluation outside the solved range [{lo}, {hi}]")
        split = self.right.grid_v[0]
        on_left = arr < split
        out = np.empty(arr.shape)
        if np.any(on_left):
            out[on_left] = method(self.left)(arr[on_left])
        if np.any(~on_left):
            out[~on_left] = method(self.right)(arr[~on_left])
        return float(out) if out.ndim == 0 else out

    def __call__(self, v):
        return self._eval(v, lambda m: m)

    def derivative(self, v):
        """Q'(v); at the shared node the right-hand value is returned."""
        return self._eval(v, lambda m: m.derivative)


def rode_rhs(v: float, q: float, qp: float, base_h: HFunction, target_h: HFunction) -> float:
    """Q'' from the recycling ODE: Ht(q) qp^2 - Hb(v) qp."""
    return target_h(q) * qp * qp - base_h(v) * qp


# Butcher tableaux as exact fractions.  The sixth-order scheme is Butcher's
# seven-stage method.
_F = Fraction
_RK4 = (
    (_F(0), _F(1, 2), _F(1, 2), _F(1)),
    ((), (_F(1, 2),), (_F(0), _F(1, 2)), (_F(0), _F(0), _F(1))),
    (_F(1, 6), _F(1, 3), _F(1, 3), _F(1, 6)),
)
_RK6 = (
    (_F(0), _F(1, 3), _F(2, 3), _F(1, 3), _F(1, 2), _F(1, 2), _F(1)),
    (
        (),
        (_F(1, 3),),
        (_F(0), _F(2, 3)),
        (_F(1, 12), _F(1, 3), _F(-1, 12)),
        (_F(-1, 16), _F(9, 8), _F(-3, 16), _F(-3, 8)),
        (_F(0), _F(9, 8), _F(-3, 8), _F(-3, 4), _F(1, 2)),
        (_F(9, 44), _F(-9, 11), _F(63, 44), _F(18, 11), _F(0), _F(-16, 11)),
    ),
    (_F(11, 120), _F(0), _F(27, 40), _F(27, 40), _F(-4, 15), _F(-4, 15), _F(11, 120)),
)
_TABLEAUX = {"rk4": _RK4, "rk6": _RK6}
_DTYPES = {"double": np.float64, "extended": np.longdouble}


@lru_cache(maxsize=None)
def _tableau(order: Order, precision: Precision):
    dt = _DTYPES[precision]
    conv = lambda f: dt(f.numerator) / dt(f.denominator)
    c, a, b = _TABLEAUX[order]
    return tuple(map(conv, c)), tuple(tuple(map(conv, row)) for row in a), tuple(map(conv, b))


def _integrate_right(p: RecyclingProblem, step: float, order: Order, precision: Precision):
    dt = _DTYPES[precision]
    one = dt(1)
    c, a, b = _tableau(order, precision)
    n = max(1, int(math.ceil(p.v_max / step - 1e-9)))
    h = dt(p.v_max) / n
    v0 = dt(p.v0)
    bh, th = p.base_h, p.target_h
    v = np.empty(n + 1)
    q = np.empty(n + 1)
    dq = np.empty(n + 1)
    v[0], q[0], dq[0] = p.v0, p.q0, p.slope0
    y0, y1 = one * p.q0, one * p.slope0
    comp0 = comp1 = 0 * one
    stages = len(c)
    k0 = [0 * one] * stages  # dQ/dv at each stage
    k1 = [0 * one] * stages  # dQ'/dv at each stage
    for i in range(n):
        x = v0 + i * h
        for s in range(stages):
            z0, z1 = y0, y1
            for j, aij in enumerate(a[s]):
                if aij:
                    z0 = z0 + h * aij * k0[j]
                    z1 = z1 + h * aij * k1[j]
            k0[s] = z1
            k1[s] = th(z0) * z1 * z1 - bh(x + c[s] * h) * z1
        # Compensated accumulation: the Gaussian-base problems amplify early
        # rounding errors by up to exp(v^2 / 2), so the per-step ulp of the
        # running state matters.
        d0 = h * sum(bj * kj for bj, kj in zip(b, k0)) - comp0
        t0 = y0 + d0
        comp0 = (t0 - y0) - d0
        y0 = t0
        d1 = h * sum(bj * kj for bj, kj in zip(b, k1)) - comp1
        t1 = y1 + d1
        comp1 = (t1 - y1) - d1
        y1 = t1
        if not (math.isfinite(y0) and math.isfinite(y1)) or abs(y0) > BLOWUP_GUARD:
            raise SolverOverflowError(f"solution left the finite range near v = {float(x + h):g}")
        if y1 <= 0:
            raise MonotonicityError(f"Q' became non-positive near v = {float(x + h):g}")
        v[i + 1] = v0 + (i + 1) * h
        q[i + 1] = y0
        dq[i + 1] = y1
    return v, q, dq


def solve_rode(
    p: RecyclingProblem,
    step: float = DEFAULT_STEP,
    order: Order = "rk6",
    precision: Precision = "double",
) -> QuantileMap:
    """Integrate a recycling problem and return the interpolable map.

    The step is rounded down so that a whole number of steps spans the range.
    ``precision="extended"`` carries the state and stage arithmetic in
    ``numpy.longdouble``; the H-functions then receive longdouble arguments,
    and keep the extra bits if they are written generically (plain
    arithmetic, no ``math`` calls).  Raises :class:`MonotonicityError` if Q'
    reaches zero and :class:`SolverOverflowError` if the state blows up.
    """
    if order not in _TABLEAUX:
        raise DomainError(f"order must be 'rk4' or 'rk6', got {order!r}")
    if precision not in _DTYPES:
        raise DomainError(f"precision must be 'double' or 'extended', got {precision!r}")
    if not 0.0 < step <= p.v_max:
        raise DomainError(f"step must lie in (0, v_max], got {step}")
    if p.direction == "right":
        v, q, dq = _integrate_right(p, step, order, precision)
        return QuantileMap(v, q, dq)
    s, r, dr = _integrate_right(p.mirrored(), step, order, precision)
    # back from R(s) = -Q(-s): reverse so the grid increases
    return QuantileMap(-s[::-1], -r[::-1], dr[::-1], reflect=True)


def solve_two_sided(
    left: RecyclingProblem,
    right: RecyclingProblem,
    step: float = DEFAULT_STEP,
    order: Order = "rk6",
    precision: Precision = "double",
) -> TwoSidedMap:
    """Solve a left/right pair that share a start point and join the maps."""
    if left.direction != "left" or right.direction != "right":
        raise DomainError("expected a (left, right) problem pair")
    if left.v0 != right.v0 or left.q0 != right.q0:
        raise DomainError("left and right problems must share their start point")
    return solve_rode(left, step, order, precision).join(solve_rode(right, step, order, precision))


# ---------------------------------------------------------------------------
# Problem builders


def _constant(value: float) -> HFunction:
    return lambda _v: value


def build_hyperbolic_problems(
    p: HyperbolicParams, split: TwoSidedExponential, v_max: float = 10.0
) -> tuple[RecyclingProblem, RecyclingProblem]:
    """Left and right problems from a two-sided exponential base to a hyperbolic target.

    The base must carry the target's tail rates.  Both sides start at
    Q(0) = 0 with slope f_base(0+-) / f_target(0).
    """
    a, b, d = p.alpha, p.beta, p.delta
    if not (math.isclose(split.rate_right, a - b) and math.isclose(split.rate_left, a + b)):
        raise DomainError("base rates must be (alpha - beta, alpha + beta)")
    g = p.gamma_h
    # 2 alpha delta K1(delta g) e^{alpha delta} / g, with K1 scaled to avoid underflow
    inv_f0 = 2.0 * a * d * bessel_k_scaled(1.0, d * g) * math.exp(d * (a - g)) / g
    target = lambda q: hyperbolic_h(q, p)
    right = RecyclingProblem(_constant(a - b), target, 0.0, 0.0, split.p_plus * (a - b) * inv_f0, "right", v_max)
    left = RecyclingProblem(_constant(-(a + b)), target, 0.0, 0.0, split.p_minus * (a + b) * inv_f0, "left", v_max)
    return left, right


def build_vg_problems(
    p: VGParams, split: TwoSidedExponential, v_max: float = 10.0
) -> tuple[RecyclingProblem, RecyclingProblem]:
    """Left and right problems from a two-sided exponential base to a variance gamma target.

    Requires lambda >= 1.  At lambda = 1 the target is itself two-sided
    exponential and the problems have the identity as their solution.
    """
    p.require_supported()
    a, b = p.alpha, p.beta
    if not (math.isclose(split.rate_right, a - b) and math.isclose(split.rate_left, a + b)):
        raise DomainError("base rates must be (alpha - beta, alpha + beta)")
    dist = VarianceGamma(p)
    if p.lam == 1.0:
        # the base is the target; pose the identity directly rather than
        # through the quadrature-accurate split
        slope_right = slope_left = 1.0
    else:
        f0 = dist.density_at_origin()
        slope_right = split.p_plus * (a - b) / f0
        slope_left = split.p_minus * (a + b) / f0
    right = RecyclingProblem(_constant(a - b), dist.h_right, 0.0, 0.0, slope_right, "right", v_max)
    left = RecyclingProblem(_constant(-(a + b)), dist.h_left, 0.0, 0.0, slope_left, "left", v_max)
    return left, right


def gaussian_to_student_problems(n: float, v_max: float = 6.0) -> tuple[RecyclingProblem, RecyclingProblem]:
    """Problems for the map Phi -> Student t_n, which starts at Q(0) = 0 with Q'(0) = gamma(n)."""
    slope = math.sqrt(0.5 * n) * gamma_ratio_half(n)
    target = lambda q: student_h(q, n)
    return (
        RecyclingProblem(normal_h, target, 0.0, 0.0, slope, "left", v_max),
        RecyclingProblem(normal_h, target, 0.0, 0.0, slope, "right", v_max),
    )


def exponential_to_normal_problem(v_max: float = 10.0) -> RecyclingProblem:
    """Unit exponential -> upper half of the normal: Q(v) = Phi^{-1}(1 - e^{-v}/2)."""
    return RecyclingProblem(_constant(1.0), normal_h, 0.0, 0.0, math.sqrt(0.5 * math.pi), "right", v_max)


def identity_problem(h: HFunction, v0: float = 0.0, q0: float | None = None, v_max: float = 6.0,
                     direction: Direction = "right") -> RecyclingProblem:
    """Base and target equal; the solution is Q(v) = v."""
    return RecyclingProblem(h, h, v0, v0 if q0 is None else q0, 1.0, direction, v_max)
