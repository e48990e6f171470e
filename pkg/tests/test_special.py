import math

import mpmath

import pytest
import scipy.special as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from coupling_forge import regularized_incomplete_beta, upper_incomplete_gamma
from coupling_forge.errors import ParameterError
from coupling_forge.special import (
    beta_integer_sum,
    beta_pair,
    gamma_pq,
    log_binomial_pmf,
    log_poisson_pmf,
    regularized_upper_gamma,
    upper_gamma_integer_sum,
)


def test_gamma_examples():
    assert float(upper_incomplete_gamma(1, 0)) == pytest.approx(1.0, abs=1e-15)
    # closed form e^{-b}(1 + b) at a = 2
    assert float(upper_incomplete_gamma(2, 3)) == pytest.approx(4 * math.exp(-3), rel=1e-14)
    assert 4 * math.exp(-3) == pytest.approx(0.199148, abs=1e-6)


def test_gamma_tail_decreases_to_zero():
    values = [float(upper_incomplete_gamma(3.5, b)) for b in (10, 50, 100)]
    assert values[0] > values[1] > values[2] >= 0
    assert values[2] < 1e-38


@pytest.mark.parametrize("a", range(1, 30))
@pytest.mark.parametrize("b", [0.0, 0.1, 1.0, 2.5, 7.0, 20.0, 60.0])
def test_gamma_matches_integer_sum(a, b):
    res = upper_incomplete_gamma(a, b)
    exact = upper_gamma_integer_sum(a, b)
    assert abs(res.value - exact) <= max(res.est_abs_error, 1e-13 * exact)


@given(
    a=st.floats(min_value=0.05, max_value=60),
    b=st.floats(min_value=0.0, max_value=120),
)
@settings(max_examples=300, deadline=None)
def test_gamma_recurrence(a, b):
    lhs = upper_incomplete_gamma(a + 1, b).value
    rhs = a * upper_incomplete_gamma(a, b).value + b**a * math.exp(-b)
    scale = max(1.0, math.gamma(a + 1))
    assert abs(lhs - rhs) <= 1e-11 * scale


@given(
    a=st.floats(min_value=0.05, max_value=200),
    b=st.floats(min_value=0.0, max_value=300),
)
@settings(max_examples=300, deadline=None)
def test_gamma_pq_high_precision(a, b):
    mpmath.mp.dps = 40
    p, q = gamma_pq(a, b)
    assert p + q == pytest.approx(1.0, abs=1e-14)
    assert q == pytest.approx(float(mpmath.gammainc(a, b, mpmath.inf, regularized=True)), rel=1e-11, abs=1e-300)
    assert p == pytest.approx(float(mpmath.gammainc(a, 0, b, regularized=True)), rel=1e-11, abs=1e-300)
    assert regularized_upper_gamma(a, b).value == pytest.approx(q, rel=1e-15, abs=0)


def test_beta_examples():
    assert regularized_incomplete_beta(1.0, 2.5, 3.0).value == 1.0
    assert regularized_incomplete_beta(0.0, 2.5, 3.0).value == 0.0
    assert regularized_incomplete_beta(0.5, 1, 1).value == pytest.approx(0.5, abs=1e-15)


@given(
    x=st.floats(min_value=0.0, max_value=1.0),
    a=st.floats(min_value=0.05, max_value=300),
    b=st.floats(min_value=0.05, max_value=300),
)
@settings(max_examples=400, deadline=None)
def test_beta_symmetry(x, a, b):
    # snap x so that x and 1 - x are exact complements in floating point
    x = 1.0 - (1.0 - x)
    lhs = regularized_incomplete_beta(x, a, b).value
    rhs = 1.0 - regularized_incomplete_beta(1.0 - x, b, a).value
    assert 0.0 <= lhs <= 1.0
    assert abs(lhs - rhs) <= 1e-12


@given(
    x=st.floats(min_value=0.0, max_value=1.0),
    a=st.floats(min_value=0.05, max_value=300),
    b=st.floats(min_value=0.05, max_value=300),
)
@settings(max_examples=400, deadline=None)
def test_beta_high_precision(x, a, b):
    mpmath.mp.dps = 40
    ix, jx = beta_pair(x, a, b)
    # take the smaller side directly; 1 - small is then harmless
    lower = mpmath.betainc(a, b, 0, x, regularized=True)
    if lower <= 0.5:
        ref_i, ref_j = lower, 1 - lower
    else:
        upper = mpmath.betainc(b, a, 0, mpmath.mpf(1) - mpmath.mpf(x), regularized=True)
        ref_i, ref_j = 1 - upper, upper
    assert ix == pytest.approx(float(ref_i), rel=1e-10, abs=1e-300)
    assert jx == pytest.approx(float(ref_j), rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("a", range(1, 25, 3))
@pytest.mark.parametrize("b", range(1, 25, 4))
@pytest.mark.parametrize("x", [0.01, 0.2, 0.5, 0.77, 0.999])
def test_beta_matches_binomial_sum(a, b, x):
    assert regularized_incomplete_beta(x, a, b).value == pytest.approx(
        beta_integer_sum(x, a, b), rel=1e-12, abs=1e-15
    )


def test_beta_accurate_complement_near_one():
    # 1 - x loses digits; passing y keeps the complement exact
    u = 1e-12
    _, jx = beta_pair(1.0 - u, 1.0, 3.0, y=u)
    assert jx == pytest.approx(u**3, rel=1e-10)


def test_domain_errors():
    with pytest.raises(ParameterError):
        upper_incomplete_gamma(0, 1)
    with pytest.raises(ParameterError):
        upper_incomplete_gamma(1, -1)
    with pytest.raises(ParameterError):
        regularized_incomplete_beta(1.5, 1, 1)
    with pytest.raises(ParameterError):
        regularized_incomplete_beta(0.5, -1, 1)


@pytest.mark.parametrize("lam", [0.3, 7.0, 250.0, 5.0e4, 3.0e7])
def test_poisson_log_pmf_high_precision(lam):
    mpmath.mp.dps = 50
    for k in {0, 1, int(lam), int(lam) + 3, int(2 * lam) + 1}:
        exact = -lam + k * mpmath.log(lam) - mpmath.loggamma(k + 1)
        assert log_poisson_pmf(k, lam) == pytest.approx(float(exact), rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("n,p", [(5, 0.3), (200, 0.5), (5040, 0.999), (40320, 1e-3)])
def test_binomial_log_pmf_high_precision(n, p):
    mpmath.mp.dps = 50
    for k in {0, 1, n // 2, int(n * p), n - 1, n}:
        exact = (
            mpmath.loggamma(n + 1) - mpmath.loggamma(k + 1) - mpmath.loggamma(n - k + 1)
            + k * mpmath.log(p) + (n - k) * mpmath.log(1 - mpmath.mpf(p))
        )
        assert log_binomial_pmf(k, n, p, 1 - p) == pytest.approx(float(exact), rel=1e-13, abs=1e-13)


def poisson_tail_mp(a, x, upper):
    """High-precision ``P(Poisson(x) >= a)`` (upper) or ``P(Poisson(x) < a)``."""
    mpmath.mp.dps = 40
    x = mpmath.mpf(x)
    k = a if upper else a - 1
    term = mpmath.exp(-x + k * mpmath.log(x) - mpmath.loggamma(k + 1))
    total = mpmath.mpf(0)
    while term > total * mpmath.mpf(10) ** -25 and k >= 0:
        total += term
        if upper:
            k += 1
            term *= x / k
        else:
            term *= k / x
            k -= 1
    return float(total)


# scipy drifts by ~1e-3 relative for a in the millions, so the oracle here is
# the Poisson tail summed in 40-digit arithmetic (integer a only)
@pytest.mark.parametrize("a", [1000, 5275649])
@pytest.mark.parametrize("shift", [-6.0, -1.0, 0.0, 0.5, 4.0])
def test_gamma_large_a_near_transition(a, shift):
    x = a + shift * math.sqrt(a)
    p, q = gamma_pq(a, x)
    if p < 0.5:
        assert p == pytest.approx(poisson_tail_mp(a, x, upper=True), rel=1e-11)
    else:
        assert q == pytest.approx(poisson_tail_mp(a, x, upper=False), rel=1e-11)


@pytest.mark.parametrize("a,b", [(5040.0, 3.0), (2e4, 3e4), (1e6, 1.0)])
def test_beta_large_parameters(a, b):
    mean = a / (a + b)
    sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
    for z in (-3.0, 0.0, 2.0):
        x = min(max(mean + z * sd, 1e-12), 1 - 1e-12)
        ix, jx = beta_pair(x, a, b)
        assert ix == pytest.approx(sc.betainc(a, b, x), rel=1e-9, abs=1e-300)
        assert jx == pytest.approx(sc.betaincc(a, b, x), rel=1e-9, abs=1e-300)
