import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgraf import (
    CapExceeded,
    DomainError,
    HypergeometricSpec,
    NonConvergent,
    PoleAtNonpositiveInteger,
    PoleInLowerParameter,
    QContext,
    bessel_j,
    one_phi_one_shift_residual,
    phi,
    phi_regularized,
    phi_rs,
    qgamma,
    qpoch_finite,
    qpoch_infinite,
)

CTX = QContext(0.5, tol=1e-14)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.2, 1.5, float("nan"), True])
def test_context_rejects_bad_q(q):
    with pytest.raises(DomainError):
        QContext(q)


@pytest.mark.parametrize("kw", [dict(tol=0.0), dict(tol=-1.0), dict(max_terms=0), dict(max_product_factors=2.5)])
def test_context_rejects_bad_caps(kw):
    with pytest.raises(DomainError):
        QContext(0.5, **kw)


def test_qpoch_finite_small_cases():
    assert qpoch_finite(0.123 + 4j, CTX, 0) == 1
    assert all(qpoch_finite(1, CTX, k) == 0 for k in range(1, 6))
    assert qpoch_finite(0.5, 0.5, 2) == pytest.approx(0.375, abs=1e-16)


@settings(max_examples=50, deadline=None)
@given(a=st.complex_numbers(max_magnitude=3.0), q=st.floats(0.05, 0.95), k=st.integers(0, 30))
def test_qpoch_finite_step(a, q, k):
    lhs = qpoch_finite(a, q, k + 1)
    rhs = qpoch_finite(a, q, k) * (1 - a * q ** k)
    assert abs(lhs - rhs) <= 4 * 2.2e-16 * max(1.0, abs(lhs))


def test_qpoch_infinite_zero_and_euler():
    v = qpoch_infinite(0, CTX)
    assert v.value == 1 and v.tail_bound == 0
    e = qpoch_infinite(0.5, CTX)
    assert abs(e.value - 0.2887880950866024) < 1e-12
    assert e.tail_bound < CTX.tol


@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("phase", [0.0, 2.0])
def test_qpoch_infinite_functional_equation(q, r, phase):
    ctx = QContext(q, tol=1e-14)
    a = r * cmath.exp(1j * phase)
    left = qpoch_infinite(a, ctx)
    right = qpoch_infinite(a * q, ctx)
    assert abs(left.value - (1 - a) * right.value) <= ctx.tol + left.tail_bound + abs(1 - a) * right.tail_bound


def test_qpoch_infinite_cap():
    with pytest.raises(CapExceeded):
        qpoch_infinite(0.5, QContext(0.999, max_product_factors=100))


def test_phi_upper_one_gives_one():
    v = phi_rs(HypergeometricSpec([1.0, 0.3], [0.7], 0.9), CTX)
    assert v.value == 1


def test_phi_q_exponential():
    v = phi([0.0], [], 0.3, CTX)
    assert abs(v.value - 1 / qpoch_infinite(0.3, CTX).value) < 1e-13


def test_phi_three_phi_two_gives_s1():
    # terminating 3phi2(q^-1, a e^it, a e^-it; ab, 0; q, q), times a^-1 (ab;q)_1
    q, a, b, t = 0.5, 0.3, 0.2, 0.9
    e = cmath.exp(1j * t)
    v = phi([1 / q, a * e, a / e], [a * b, 0.0], q, CTX)
    s1 = (1 - a * b) / a * v.value
    assert abs(s1 - (2 * math.cos(t) - a - b)) < 1e-14


@pytest.mark.parametrize("n", [0, 1, 3, 7])
def test_phi_terminating_term_count(n):
    v = phi([0.5 ** -n, 0.4], [0.3], 2.5, CTX)
    assert v.terms_used == n + 1 and v.tail_bound == 0


def test_phi_pole_detected():
    with pytest.raises(PoleInLowerParameter):
        phi([0.3], [0.5 ** -2], 0.4, CTX)


def test_phi_nonconvergent():
    with pytest.raises(NonConvergent):
        phi([0.3, 0.2, 0.1], [0.4], 0.2, CTX)
    with pytest.raises(NonConvergent):
        phi([0.3, 0.2], [0.4], 1.2, CTX)


def test_phi_term_cap():
    with pytest.raises(CapExceeded):
        phi([0.3, 0.2], [0.4], 0.99, QContext(0.5, max_terms=20))


def test_phi_regularized_n0_is_plain_series():
    v = phi_regularized([0.3], 0, [], 0.7, CTX)
    ref = qpoch_infinite(0.5, CTX).value * phi([0.3], [0.5], 0.7, CTX).value
    assert abs(v.value - ref) < 1e-14


def test_phi_regularized_dropped_terms_vanish():
    # q^{-1} upper parameter: c_k = 0 for k >= 2, and n = 3 drops k < 3
    v = phi_regularized([2.0, 0.3], 3, [], 0.4, CTX)
    assert abs(v.value) < 1e-15


@pytest.mark.parametrize("n", [1, 2, 4])
@pytest.mark.parametrize("upper,extra,z", [([0.3], [], 0.7), ([0.3, 0.2j], [0.1], 0.5)])
def test_phi_regularized_forms_agree(n, upper, extra, z):
    s = phi_regularized(upper, n, extra, z, CTX)
    d = phi_regularized(upper, n, extra, z, CTX, form="direct")
    assert abs(s.value - d.value) < 1e-12


@pytest.mark.parametrize("n", [-3, -2, -1, 0, 1, 2, 3, 4, 5])
def test_one_phi_one_shift(n):
    r = one_phi_one_shift_residual(0.3, 0.7, n, 0.5)
    assert r.passed and r.abs_residual < 1e-10
    if n == 0:
        assert r.abs_residual < 1e-15


def test_qgamma_values():
    assert qgamma(1, CTX) == pytest.approx(1, abs=1e-14)
    assert qgamma(2, CTX) == pytest.approx(1, abs=1e-14)
    near_one = QContext(0.999, max_product_factors=60000)
    assert abs(qgamma(0.5, near_one) - math.sqrt(math.pi)) < 5e-3
    with pytest.raises(CapExceeded):
        qgamma(0.5, 0.999)


@pytest.mark.parametrize("x", [0, -1, -4])
def test_qgamma_poles(x):
    with pytest.raises(PoleAtNonpositiveInteger):
        qgamma(x, CTX)


def test_qgamma_functional_equation():
    q, x = 0.6, 1.7
    assert qgamma(x + 1, q) == pytest.approx((1 - q ** x) / (1 - q) * qgamma(x, q), rel=1e-13)


def test_bessel_small_cases():
    assert bessel_j(0, 0) == 1
    z = 1.3
    assert abs(bessel_j(0.5, z) - math.sqrt(2 / (math.pi * z)) * math.sin(z)) < 1e-12
    total = sum(bessel_j(n, 2.0) ** 2 for n in range(-40, 41))
    assert abs(total - 1) < 1e-12


def test_bessel_against_mpmath():
    import mpmath

    for nu in (0, 1, 2.5, -1.5, 7, -3, 12, 30.5):
        for z in (0.1, 1.0, 5.0, 13.7, 20.0, 33.0, 49.9):
            ref = float(mpmath.besselj(nu, z))
            assert abs(bessel_j(nu, z) - ref) < 1e-12, (nu, z)


@pytest.mark.parametrize("n", [-1, -2, -3])
def test_shift_with_removable_product_zero(n):
    # a q^n reaches 1, so (a q^n;q)_inf vanishes on the right
    q = 0.3
    rep = one_phi_one_shift_residual(q ** -n, 0.7, n, q)
    assert rep.passed and rep.abs_residual < 1e-12
