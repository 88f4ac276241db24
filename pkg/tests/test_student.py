import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from quantile_recycling.errors import DomainError
from quantile_recycling.oracle import oracle_student_from_gaussian
from quantile_recycling.special import erfc
from quantile_recycling.student import (
    MAX_ORDER,
    N4_COEFFICIENTS,
    N4_CROSSOVER,
    StudentMapConfig,
    calibrate_crossover,
    central_coefficients,
    central_eval,
    student_gamma,
    student_quantile_from_gaussian,
    tail_eval,
    tail_model,
)

from conftest import max_rel


@pytest.mark.parametrize("n, expected", [
    (4.0, 1.06384608107048714),
    (1.0, math.sqrt(math.pi / 2)),
])
def test_student_gamma(n, expected):
    assert student_gamma(n) == pytest.approx(expected, rel=1e-15)


def test_student_gamma_large_n():
    assert student_gamma(1e6) - 1.0 == pytest.approx(2.5e-7, rel=1e-3)
    with pytest.raises(DomainError):
        student_gamma(0.0)


def test_gamma_expansion_in_inverse_n():
    # gamma = 1 + a1/n + a2/n^2 + ...; recover a1 and a2 from n in {1e3, 1e4, 1e5}
    ns = [1e3, 1e4, 1e5]
    with mpmath.workdps(40):
        g = [mpmath.sqrt(mpmath.mpf(n) / 2) * mpmath.gamma(mpmath.mpf(n) / 2) / mpmath.gamma((mpmath.mpf(n) + 1) / 2)
             for n in ns]
        a1 = [(gi - 1) * n for gi, n in zip(g, ns)]
        a2 = (a1[-1] - 0.25) * ns[-1]
    assert float(a1[-1]) == pytest.approx(0.25, rel=1e-3)
    assert float(a2) == pytest.approx(1.0 / 32.0, rel=1e-3)
    assert float(student_gamma(1e5) - 1) * 1e5 == pytest.approx(float(a1[-1]), rel=1e-6)


def test_reference_coefficients_reproduced():
    s = central_coefficients(4.0, 10)
    assert s.K == 10
    for got, ref in zip(s.coeffs, N4_COEFFICIENTS):
        assert abs(got - ref) <= 1e-15 * abs(ref)


def _c1(n, g):
    return ((n + 1) * g**3 - n * g) / (6 * n)


def _c2(n, g):
    return ((7 * n * n + 8 * n + 1) * g**5 + (-10 * n * n - 10 * n) * g**3 + 3 * n * n * g) / (120 * n * n)


@pytest.mark.parametrize("n", [1.0, 2.0, 4.0, 10.0, 100.0])
def test_low_order_closed_forms(n):
    s = central_coefficients(n, 4)
    with mpmath.workdps(40):
        nn = mpmath.mpf(n)
        g = mpmath.sqrt(nn / 2) * mpmath.gamma(nn / 2) / mpmath.gamma((nn + 1) / 2)
        c1, c2 = float(_c1(nn, g)), float(_c2(nn, g))
    assert s.coeffs[0] == pytest.approx(student_gamma(n), rel=1e-15)
    assert s.coeffs[1] == pytest.approx(c1, rel=1e-14)
    assert s.coeffs[2] == pytest.approx(c2, rel=1e-14)


def test_large_n_degenerates_to_identity():
    s = central_coefficients(1e8, 10)
    assert all(abs(c) < 1e-6 for c in s.coeffs[1:])
    v = np.linspace(-3.0, 3.0, 601)
    assert np.max(np.abs(central_eval(s, v) - v)) < 1e-6


def test_coefficient_order_guard():
    with pytest.raises(DomainError):
        central_coefficients(4.0, MAX_ORDER + 1)
    with pytest.raises(DomainError):
        central_coefficients(-1.0, 3)
    assert len(central_coefficients(4.0, MAX_ORDER).coeffs) == MAX_ORDER + 1


def test_central_eval_examples():
    s = central_coefficients(4.0, 10)
    assert central_eval(s, 0.0) == 0.0
    assert central_eval(s, 1.0) == pytest.approx(math.fsum(N4_COEFFICIENTS), rel=1e-15)
    assert central_eval(s, 1.0) == pytest.approx(oracle_student_from_gaussian(1.0, 4.0), rel=2e-5)


@given(st.floats(-4.0, 4.0))
def test_central_eval_odd(v):
    s = central_coefficients(4.0, 10)
    assert central_eval(s, -v) == -central_eval(s, v)


def test_tail_model_constant():
    m = tail_model(4.0)
    assert m.d == pytest.approx(2.0 * (16.0 / 3.0) ** -0.25, rel=1e-15)
    with pytest.raises(DomainError):
        tail_model(4.0, terms=3)


def test_tail_eval_n4_closed_form():
    w = erfc(4.0 / math.sqrt(2.0)) / 2.0 * 16.0 / 3.0
    expected = 2.0 * w**-0.25 * (1.0 - 5.0 / 12.0 * math.sqrt(w))
    assert tail_eval(tail_model(4.0), 4.0) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(DomainError):
        tail_eval(tail_model(4.0), 0.0)


def test_branches_agree_at_crossover():
    s, m = central_coefficients(4.0, 10), tail_model(4.0)
    a, b = central_eval(s, N4_CROSSOVER), tail_eval(m, N4_CROSSOVER)
    assert abs(a / b - 1.0) < 1.4e-5


@pytest.mark.parametrize("v", [10.0, 20.0, 35.0])
def test_tail_leading_term_ratio(v):
    one, two = tail_model(4.0, 1), tail_model(4.0, 2)
    # the correction is O(w^(1/2)), which vanishes as v grows
    assert abs(tail_eval(two, v) / tail_eval(one, v) - 1.0) < 2.0 * math.exp(-v * v / 8) + 4e-16


@pytest.mark.parametrize("v, bound", [(0.0, 0.0), (1.5, 2e-5), (5.0, 1.4e-5), (-5.0, 1.4e-5)])
def test_composite_examples(v, bound):
    got = student_quantile_from_gaussian(v)
    if v == 0.0:
        assert got == 0.0
    else:
        assert abs(got / oracle_student_from_gaussian(v, 4.0) - 1.0) < bound


def test_composite_full_range_and_monotone():
    v = np.linspace(-8.0, 8.0, 100_000)
    got = student_quantile_from_gaussian(v)
    assert max_rel(got, oracle_student_from_gaussian(v, 4.0)) < 1.4e-5
    assert np.all(np.diff(got) > 0)


def test_config():
    assert StudentMapConfig.for_n(4.0) == StudentMapConfig()
    with pytest.raises(DomainError):
        StudentMapConfig(crossover=0.0)
    with pytest.raises(DomainError):
        student_quantile_from_gaussian(1.0, 3.0, StudentMapConfig())


@pytest.mark.parametrize("n, bound", [(1.0, 2e-5), (2.0, 2e-5), (3.0, 2e-5), (10.0, 5e-5), (30.0, 1e-6)])
def test_calibrated_other_n(n, bound):
    cfg = StudentMapConfig.for_n(n)
    assert cfg.crossover == calibrate_crossover(n)
    v = np.linspace(-8.0, 8.0, 4001)
    got = student_quantile_from_gaussian(v, n, cfg)
    assert max_rel(got, oracle_student_from_gaussian(v, n)) < bound
    assert np.all(np.diff(got) > 0)


def test_calibration_recovers_reference_crossover():
    assert calibrate_crossover(4.0) == pytest.approx(N4_CROSSOVER, abs=0.03)
