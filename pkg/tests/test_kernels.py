import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgraf import kernels
from qgraf import _kernels_py as pyk

BACKENDS = kernels.available_backends()
compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")

qs = st.floats(0.05, 0.95)
small = st.floats(-0.9, 0.9)


def test_backend_name_matches_module():
    assert kernels.BACKEND in BACKENDS
    assert kernels.qpoch_inf is BACKENDS[kernels.BACKEND].qpoch_inf


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_product_length_rule(name):
    k = BACKENDS[name].product_length(0.7, 0.5, 1e-12)
    assert 0.7 * 0.5 ** k / 0.5 < 1e-12
    assert 0.7 * 0.5 ** (k - 1) / 0.5 >= 1e-12
    assert BACKENDS[name].product_length(0.0, 0.5, 1e-12) == 0


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_qpoch_inf_euler_product(name):
    val, tail, k = BACKENDS[name].qpoch_inf(0.5, 0.5, 1e-15, 20000)
    assert abs(val - 0.2887880950866024) < 1e-14
    assert tail < 1e-14 and k > 0


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_qpoch_inf_cap(name):
    val, tail, k = BACKENDS[name].qpoch_inf(0.5, 0.999, 1e-15, 10)
    assert k == -1 and math.isinf(tail)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_phi_sum_terminating(name):
    # (q^{-2};q)_k vanishes for k > 2
    val, tail, used, status, _ = BACKENDS[name].phi_sum([0.25 ** -1], [0.3], 0.4, 0.5, 1, 1e-15, 10000, 2)
    assert used == 3 and tail == 0.0 and status == kernels.STATUS_OK


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_phi_sum_q_exponential(name):
    # sum z^k/(q;q)_k = 1/(z;q)_inf
    val, tail, _, status, _ = BACKENDS[name].phi_sum([0.0], [], 0.3, 0.5, 0, 1e-15, 10000, -1)
    ref = 1.0 / pyk.qpoch_inf(0.3, 0.5, 1e-16, 20000)[0]
    assert status == kernels.STATUS_OK
    assert abs(val - ref) < 1e-14 + tail


@compiled
@settings(max_examples=60, deadline=None)
@given(a_re=small, a_im=small, q=qs)
def test_qpoch_inf_backends_agree(a_re, a_im, q):
    a = complex(a_re, a_im)
    vp, tp, kp = pyk.qpoch_inf(a, q, 1e-14, 20000)
    vc, tc, kc = BACKENDS["cython"].qpoch_inf(a, q, 1e-14, 20000)
    assert kp == kc
    assert abs(vp - vc) <= 1e-13 * max(1.0, abs(vp))
    assert tc == pytest.approx(tp, rel=1e-9, abs=1e-300)


@compiled
@settings(max_examples=60, deadline=None)
@given(a=small, b=small, z_re=small, z_im=small, q=qs, e=st.integers(0, 2))
def test_phi_sum_backends_agree(a, b, z_re, z_im, q, e):
    z = complex(z_re, z_im)
    args = ([a, 0.2], [b * 0.5], z, q, e, 1e-14, 10000, -1)
    rp = pyk.phi_sum(*args)
    rc = BACKENDS["cython"].phi_sum(*args)
    assert rp[2:4] == rc[2:4]
    assert abs(rp[0] - rc[0]) <= 1e-13 * max(1.0, abs(rp[0]))


@compiled
def test_phi_sum_vec_backends_agree():
    rng = np.random.default_rng(7)
    upper = rng.uniform(-0.8, 0.8, (2, 33)) + 1j * rng.uniform(-0.3, 0.3, (2, 33))
    lower = rng.uniform(-0.5, 0.5, (1, 33))
    rp = pyk.phi_sum_vec(upper, lower, 0.6, 0.4, 0, 1e-14, 10000, -1)
    rc = BACKENDS["cython"].phi_sum_vec(upper, lower, 0.6, 0.4, 0, 1e-14, 10000, -1)
    assert rp[2] == rc[2] and rp[3] == rc[3]
    np.testing.assert_allclose(rc[0], rp[0], rtol=1e-13, atol=1e-15)


@compiled
def test_qpoch_vec_and_ratio_backends_agree():
    a = np.linspace(-0.9, 0.9, 17) * np.exp(0.3j)
    vp, tp, kp = pyk.qpoch_inf_vec(a, 0.6, 1e-14, 20000)
    vc, tc, kc = BACKENDS["cython"].qpoch_inf_vec(a, 0.6, 1e-14, 20000)
    assert kp == kc
    np.testing.assert_allclose(vc, vp, rtol=1e-13)
    rp = pyk.qpoch_ratio(0.3 + 0.1j, -0.7, 0.8, 1e-14, 20000)
    rc = BACKENDS["cython"].qpoch_ratio(0.3 + 0.1j, -0.7, 0.8, 1e-14, 20000)
    assert abs(rp[0] - rc[0]) < 1e-13 and rp[2] == rc[2]


@compiled
@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
def test_asc_table_backends_agree(q):
    x = np.cos(np.linspace(0, math.pi, 9))
    tp = pyk.asc_table(x, 0.4, -0.3, q, 20)
    tc = BACKENDS["cython"].asc_table(x, 0.4, -0.3, q, 20)
    np.testing.assert_allclose(tc, tp, rtol=1e-13, atol=1e-13)
