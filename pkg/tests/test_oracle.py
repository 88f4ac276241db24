import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special as sp

from quantile_recycling.distributions import (
    Hyperbolic,
    HyperbolicParams,
    Normal,
    StudentT,
    TwoSidedExponential,
    two_sided_exp_quantile,
)
from quantile_recycling.errors import DomainError, OracleFailure
from quantile_recycling.oracle import (
    DEFAULT_CONFIG,
    OracleConfig,
    norm_cdf,
    norm_sf,
    oracle_cdf_inverse,
    oracle_exp_normal,
    oracle_normal_quantile,
    oracle_student_from_gaussian,
    oracle_student_quantile,
    probit_series,
)

from conftest import max_rel


def _mp_probit(u):
    """Phi^-1(u) by a log-domain root solve in 50-digit arithmetic."""
    with mpmath.workdps(50):
        p = mpmath.mpf(u) if u < 0.5 else 1 - mpmath.mpf(u)
        z = mpmath.findroot(lambda z: mpmath.log(mpmath.ncdf(z)) - mpmath.log(p), float(sp.ndtri(float(p))))
        return float(z if u < 0.5 else -z)


def _mp_student_upper(p, n):
    """t with P(T > t) = p, solved on the log scale in 40-digit arithmetic."""
    from scipy import stats
    with mpmath.workdps(40):
        nn, pp = mpmath.mpf(n), mpmath.mpf(p)

        def f(log_t):
            t2 = mpmath.exp(2 * log_t)
            return mpmath.log(mpmath.betainc(nn / 2, mpmath.mpf(1) / 2, 0, nn / (nn + t2), regularized=True) / 2) - mpmath.log(pp)

        start = float(stats.t.isf(float(p), n))
        return float(mpmath.exp(mpmath.findroot(f, math.log(start))))


def test_config_validation():
    assert DEFAULT_CONFIG.abs_tol == 1e-16 and DEFAULT_CONFIG.max_iter == 200
    with pytest.raises(DomainError):
        OracleConfig(abs_tol=0.0)
    with pytest.raises(DomainError):
        OracleConfig(max_iter=0)


@pytest.mark.parametrize("u, expected", [
    (0.5, 0.0),
    (0.975, 1.959963984540054),
    (0.025, -1.959963984540054),
])
def test_normal_quantile_examples(u, expected):
    assert oracle_normal_quantile(u) == pytest.approx(expected, rel=1e-15, abs=0)


def test_normal_quantile_deep_upper():
    # 1 - e^-37 / 2 is 1.0 in binary64; the exponential coordinate carries it
    assert round(oracle_exp_normal(37.0), 4) == 8.3236
    assert oracle_normal_quantile(math.exp(-37.0) / 2.0) == pytest.approx(-oracle_exp_normal(37.0), rel=1e-15)


@pytest.mark.parametrize("u", [1e-300, 1e-100, 1e-30, 1e-10, 1e-3, 0.1, 0.3, 0.49, 0.51, 0.9, 1 - 1e-9, 1 - 1e-15])
def test_normal_quantile_vs_mpmath(u):
    assert oracle_normal_quantile(u) == pytest.approx(_mp_probit(u), rel=4e-16)


def test_normal_quantile_self_consistency():
    u = np.concatenate([np.geomspace(1e-30, 0.5, 2000), 1.0 - np.geomspace(1e-15, 0.5, 2000)])
    z = oracle_normal_quantile(u)
    resid = np.abs(norm_cdf(z) - u)
    # Phi is evaluated at the rounded z, so the residual is bounded by the
    # conditioning phi(z) * |z| * eps on top of abs_tol * max(u, 1 - u)
    slack = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * np.abs(z) * 2.3e-16
    assert np.all(resid <= DEFAULT_CONFIG.abs_tol * np.maximum(u, 1 - u) + slack)


def test_normal_quantile_vectorised_and_domain():
    u = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(oracle_normal_quantile(u), sp.ndtri(u), rtol=1e-15)
    for bad in (0.0, 1.0, -1.0, np.nan):
        with pytest.raises(DomainError):
            oracle_normal_quantile(bad)


@pytest.mark.parametrize("u", np.linspace(0.05, 0.95, 37))
def test_dual_method_agreement(u):
    assert probit_series(u) == pytest.approx(oracle_normal_quantile(u), rel=1e-14, abs=1e-15)


@pytest.mark.parametrize("z", [-40.0, -8.0, -1.0, 0.0, 0.5, 5.0, 30.0])
def test_norm_cdf_sf_vs_mpmath(z):
    assert norm_cdf(z) == pytest.approx(float(mpmath.ncdf(z)), rel=2e-16)
    assert norm_sf(z) == pytest.approx(float(mpmath.ncdf(-z)), rel=2e-16)


@pytest.mark.parametrize("v", [-0.69, -0.3, 0.0, 1e-8, 0.1, 1.0, 37.0, 74.0, 700.0, 5000.0, 1e6])
def test_exp_normal_vs_mpmath(v):
    with mpmath.workdps(60):
        vm = mpmath.mpf(v)
        half = mpmath.exp(-vm) / 2
        # upper-half quantile is -Phi^-1(e^-v / 2), exact in mpmath at any depth
        ref = float(-mpmath.sqrt(2) * mpmath.erfinv(2 * half - 1)) if half > mpmath.mpf(10) ** -40 else \
            float(mpmath.findroot(lambda z: mpmath.log(mpmath.ncdf(-z)) - mpmath.log(half), math.sqrt(2 * v)))
    # near v = -log 2 the map itself amplifies the rounding of v by |v z'(v) / z|
    cond = abs(v * math.exp(-v + ref * ref / 2) * math.sqrt(math.pi / 2) / ref) if v < 0.0 else 1.0
    assert oracle_exp_normal(v) == pytest.approx(ref, rel=4e-16 * max(1.0, cond), abs=1e-300)


def test_exp_normal_domain():
    with pytest.raises(DomainError):
        oracle_exp_normal(-math.log(2.0))


@pytest.mark.parametrize("n, u, expected", [
    (4.0, 0.5, 0.0),
    (1.0, 0.75, 1.0),
    (4.0, 0.95, 2.1318467863266495),
])
def test_student_quantile_examples(n, u, expected):
    assert oracle_student_quantile(u, n) == pytest.approx(expected, rel=1e-15, abs=1e-300)


@pytest.mark.parametrize("n", [0.5, 1.0, 2.0, 3.0, 4.0, 7.5, 30.0])
@pytest.mark.parametrize("u", [1e-20, 1e-6, 0.01, 0.3, 0.6, 0.99, 1 - 1e-12])
def test_student_quantile_vs_mpmath(n, u):
    lower = u < 0.5
    # 1 - u is exact for these inputs
    t = _mp_student_upper(u if lower else 1.0 - u, n)
    ref = -t if lower else t
    # closed forms for n in {1, 2, 4}; quadrature otherwise, whose tail
    # amplifies relative errors in the mass by 1/n
    tol = 2e-15 if n in (1.0, 2.0, 4.0) else 2e-15 * max(1.0, 1.0 / n) * 4
    assert oracle_student_quantile(u, n) == pytest.approx(ref, rel=tol)


@given(st.floats(0.01, 0.99))
def test_student_large_n_is_normal(u):
    assert oracle_student_quantile(u, 1e8) == pytest.approx(oracle_normal_quantile(u), rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("n", [1.0, 4.0, 10.0])
def test_student_from_gaussian(n):
    v = np.linspace(-12.0, 12.0, 49)
    got = oracle_student_from_gaussian(v, n)
    nz = v != 0.0
    ref = [math.copysign(_mp_student_upper(mpmath.ncdf(-abs(t)), n), t) for t in v[nz]]
    assert max_rel(got[nz], ref) < 1e-15
    assert got[v == 0][0] == 0.0
    assert np.all(np.diff(got) > 0)


def test_cdf_inverse_symmetric_median():
    assert oracle_cdf_inverse(Hyperbolic(HyperbolicParams(1.0, 0.0, 1.0)), 0.5) == 0.0


@pytest.mark.parametrize("u", [1e-9, 0.02, 0.3, 0.5, 0.77, 0.999, 1 - 1e-10])
def test_cdf_inverse_vs_two_sided_closed_form(u):
    t = TwoSidedExponential.matching(1.5, 0.4, 0.62)
    assert oracle_cdf_inverse(t, u) == pytest.approx(two_sided_exp_quantile(u, t), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("dist, n", [(Normal(), None), (StudentT(4.0), 4.0), (StudentT(3.0), 3.0)])
@pytest.mark.parametrize("u", [1e-12, 0.01, 0.4, 0.9, 1 - 1e-9])
def test_cdf_inverse_vs_dedicated_oracles(dist, n, u):
    ref = oracle_normal_quantile(u) if n is None else oracle_student_quantile(u, n)
    assert oracle_cdf_inverse(dist, u, scale=100.0) == pytest.approx(ref, rel=1e-11)


def test_cdf_inverse_bracket_limit():
    # t_3 at u = 1e-12 lies near -1e4, beyond 1e3 scale units
    with pytest.raises(OracleFailure):
        oracle_cdf_inverse(StudentT(3.0), 1e-12)


def test_cdf_inverse_hyperbolic_roundtrip():
    from scipy import integrate
    d = Hyperbolic(HyperbolicParams(1.0, 0.0, 1.0))
    x = oracle_cdf_inverse(d, 0.9)
    mass = 0.5 + integrate.quad(d.density, 0.0, x, epsabs=0, epsrel=1e-13)[0]
    assert mass == pytest.approx(0.9, rel=1e-12)


def test_cdf_inverse_domain():
    with pytest.raises(DomainError):
        oracle_cdf_inverse(Normal(), 1.0)
