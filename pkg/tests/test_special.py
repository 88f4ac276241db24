import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from quantile_recycling.errors import DomainError
from quantile_recycling.special import (
    Accuracy,
    bessel_k,
    bessel_k_ratio,
    bessel_k_scaled,
    erf,
    erfc,
    gamma_ratio_half,
    hyp2f1,
)


def test_accuracy_validation():
    Accuracy(1e-6, 16)
    with pytest.raises(DomainError):
        Accuracy(1e-5)
    with pytest.raises(DomainError):
        Accuracy(1e-12, 8)


@pytest.mark.parametrize("n, expected", [
    (4.0, 4.0 / (3.0 * math.sqrt(math.pi))),
    (1.0, math.sqrt(math.pi)),
])
def test_gamma_ratio_half_exact(n, expected):
    assert gamma_ratio_half(n) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("n", [0.1, 0.5, 3.0, 7.5, 100.0, 1e4, 1e8])
def test_gamma_ratio_half_vs_mpmath(n):
    exact = mpmath.gamma(mpmath.mpf(n) / 2) / mpmath.gamma((mpmath.mpf(n) + 1) / 2)
    assert gamma_ratio_half(n) == pytest.approx(float(exact), rel=1e-13)


@given(st.floats(min_value=1e-3, max_value=1e6))
def test_gamma_ratio_half_chain(n):
    # G(n/2)/G((n+1)/2) * G((n+1)/2)/G(n/2+1) = 2/n
    assert gamma_ratio_half(n) * gamma_ratio_half(n + 1.0) == pytest.approx(2.0 / n, rel=1e-13)


@pytest.mark.parametrize("n", [0.0, -1.0])
def test_gamma_ratio_half_domain(n):
    with pytest.raises(DomainError):
        gamma_ratio_half(n)


def _k_half(x):
    return math.sqrt(math.pi / (2 * x)) * math.exp(-x)


@pytest.mark.parametrize("nu, x, expected", [
    (0.5, 1.0, 0.46106850444789456),
    (1.0, 1.0, 0.60190723019723458),
    (1.5, 2.0, _k_half(2.0) * 1.5),
])
def test_bessel_k_examples(nu, x, expected):
    assert bessel_k(nu, x) == pytest.approx(expected, rel=1e-12)


@given(st.floats(min_value=1e-3, max_value=600.0))
def test_bessel_k_half_integer_closed_forms(x):
    assert bessel_k(0.5, x) == pytest.approx(_k_half(x), rel=1e-12)
    assert bessel_k(1.5, x) == pytest.approx(_k_half(x) * (1.0 + 1.0 / x), rel=1e-12)


@pytest.mark.parametrize("nu", [0.0, 0.25, 1.0, 2.5, 7.0, 20.0])
@pytest.mark.parametrize("x", [1e-3, 0.3, 1.0, 5.0, 30.0, 200.0])
def test_bessel_k_vs_mpmath(nu, x):
    ref = float(mpmath.besselk(nu, x) * mpmath.exp(x))
    assert bessel_k_scaled(nu, x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("nu", [0.5, 1.0, 3.3])
def test_bessel_k_symmetric_order_and_monotone(nu):
    assert bessel_k(-nu, 2.0) == bessel_k(nu, 2.0)
    x = np.linspace(0.01, 50.0, 400)
    k = np.array([bessel_k(nu, t) for t in x])
    assert np.all(np.diff(k) < 0.0)


def test_bessel_k_ratio_half_orders():
    assert bessel_k_ratio(0.5, 1.5, 1.0) == pytest.approx(0.5, rel=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_bessel_k_domain(x):
    with pytest.raises(DomainError):
        bessel_k(1.0, x)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 5))
def test_hyp2f1_at_zero(a, b, c):
    assert hyp2f1(a, b, c, 0.0) == 1.0


def test_hyp2f1_log_closed_form():
    assert hyp2f1(1.0, 1.0, 2.0, 0.5) == pytest.approx(2.0 * math.log(2.0), rel=1e-13)


@pytest.mark.parametrize("a, b, c, z", [
    (3.0, 1.5, 2.5, -1.0 / 3.0),
    (4.0, 2.0, 3.0, -0.9),
    (6.0, 3.0, 4.0, -7.0 / 3.0),
    (0.7, 1.3, 2.2, 0.45),
    (2.0, 1.0, 2.0, -9.0),
])
def test_hyp2f1_vs_mpmath(a, b, c, z):
    assert hyp2f1(a, b, c, z) == pytest.approx(float(mpmath.hyp2f1(a, b, c, z)), rel=1e-12)


def test_hyp2f1_domain():
    with pytest.raises(DomainError):
        hyp2f1(1.0, 1.0, -2.0, 0.1)


@pytest.mark.parametrize("x, expected", [(0.0, 1.0), (1.0, 0.15729920705028513)])
def test_erfc_examples(x, expected):
    assert erfc(x) == pytest.approx(expected, rel=1e-15)


def test_erfc_limits():
    assert erfc(np.inf) == 0.0 and erfc(-np.inf) == 2.0
    assert 0.0 < erfc(26.0) < 1e-290


@pytest.mark.parametrize("x", np.linspace(-26.5, 26.5, 107))
def test_erfc_vs_mpmath(x):
    # libm erfc; normal (non-subnormal) results are accurate to a few ulps
    assert erfc(x) == pytest.approx(float(mpmath.erfc(x)), rel=1e-15)


@given(st.floats(-27, 27))
def test_erfc_reflection(x):
    assert abs(erfc(x) + erfc(-x) - 2.0) <= 1e-15
    assert erf(x) == pytest.approx(1.0 - erfc(x), abs=2e-16)


def test_erfc_vectorized():
    x = np.array([-1.0, 0.0, 1.0])
    np.testing.assert_allclose(erfc(x), [2 - 0.15729920705028513, 1.0, 0.15729920705028513], rtol=1e-15)
