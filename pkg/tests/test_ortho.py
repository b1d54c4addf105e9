import itertools
import math

import numpy as np
import pytest

from qgraf import CapExceeded, DomainError, DoublingCapExceeded, QContext, qpoch_infinite
from qgraf.ortho import (
    QuadratureGrid,
    WeightSpec,
    asc_orthogonality_matrix,
    asc_orthogonality_residual,
    integrate,
    lemma1_group,
    lemma1_residual,
    qcharlier_orthogonality_residual,
    weight_eval,
)
from qgraf.polys import ASCParams, CharlierParams

FINE = QContext(0.5, tol=1e-16)


def test_weight_vanishes_at_endpoints():
    w = WeightSpec(ASCParams(0.4, -0.2, 0.5))
    assert weight_eval(0.0, w) == 0
    assert weight_eval(math.pi, w) == 0
    assert abs(weight_eval(1e-8, w)) < 1e-6
    assert abs(weight_eval(math.pi - 1e-8, w)) < 1e-6


def test_weight_real_and_positive():
    w = WeightSpec(ASCParams(0.4, -0.2, 0.5))
    v = weight_eval(1.1, w)
    assert abs(np.imag(v)) < 1e-13
    assert np.real(v) > 0
    th = np.linspace(0.01, math.pi - 0.01, 200)
    assert np.all(np.real(weight_eval(th, w)) > 0)


def test_weight_needs_unit_disc():
    with pytest.raises(DomainError):
        WeightSpec(ASCParams(1.2, 0.1, 0.5))


def test_integrate_constant():
    # the rule returns (1/2pi) int_0^pi f, so f = 2 integrates to 1
    assert integrate(lambda th: np.full_like(th, 2.0)).value == pytest.approx(1.0, abs=1e-15)
    assert integrate(lambda th: np.full_like(th, 2 * math.pi)).value == pytest.approx(math.pi, abs=1e-14)


def test_integrate_bare_weight():
    par = ASCParams(0.0, 0.0, 0.5)
    w = WeightSpec(par)
    v = integrate(lambda th: weight_eval(th, w))
    assert abs(v.value - 1 / qpoch_infinite(0.5, FINE).value) < 1e-12


def test_doubling_converges_by_256():
    par = ASCParams(0.4, 0.3, 0.5)
    w = WeightSpec(par)
    v = integrate(lambda th: weight_eval(th, w), QuadratureGrid(tol=1e-12, max_order=256))
    assert v.terms_used <= 256 and v.tail_bound < 1e-12


def test_doubling_cap():
    with pytest.raises(DoublingCapExceeded):
        integrate(lambda th: np.abs(np.cos(th)) ** 0.5, QuadratureGrid(max_order=32, tol=1e-15))


@pytest.mark.parametrize("order", [64, 128])
def test_cosine_exactness(order):
    grid = QuadratureGrid()
    th, w = grid.nodes(order)
    for k in range(1, 21):
        assert abs(np.cos(k * th) @ w) < 1e-13


def test_orthogonality_examples():
    r = asc_orthogonality_residual(0, 0, ASCParams(0.0, 0.0, 0.5), tol=1e-11)
    assert r.passed and r.abs_residual < 1e-11
    par = ASCParams(0.4, 0.3, 0.5)
    off = asc_orthogonality_residual(3, 5, par, tol=1e-11)
    assert off.passed and abs(off.lhs) < 1e-11
    diag = asc_orthogonality_residual(4, 4, par, tol=1e-10)
    assert diag.passed and diag.abs_residual < 1e-10


@pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
def test_orthogonality_matrix_grid(q):
    for a, b in itertools.product((-0.5, 0.3, 0.7), repeat=2):
        reps = asc_orthogonality_matrix(6, ASCParams(a, b, q), tol=1e-9)
        assert all(r.passed and r.abs_residual < 1e-9 for r in reps)


def test_lemma1_examples():
    z = lemma1_residual(2, 3, 1, 0.5, ASCParams(0.3, 0.2, 0.5), tol=1e-11)
    assert z.passed and abs(z.lhs) < 1e-11 and abs(z.rhs) < 1e-11
    assert "structural zero n > r" in z.notes
    r = lemma1_residual(1, 0, 0, 1.0, ASCParams(0.3, 0.2, 0.5), tol=1e-10)
    assert r.passed and r.abs_residual < 1e-10
    neg = lemma1_residual(2, -1, 2, 0.5, ASCParams(0.25, 0.4, 0.6), tol=1e-10)
    assert neg.passed and neg.abs_residual < 1e-10


def test_lemma1_group_matches_single():
    par = ASCParams(0.3, -0.5, 0.5)
    group = lemma1_group(3, 2, 1.0, par, 4)
    for rep in group:
        m, n = rep.case["m"], rep.case["n"]
        single = lemma1_residual(m, n, 2, 1.0, par)
        assert abs(single.lhs - rep.lhs) < 1e-12
        assert abs(single.rhs - rep.rhs) < 1e-12


def test_lemma1_flags_outside_disc():
    rep = lemma1_residual(1, 0, 0, 2.0, ASCParams(0.7, 0.3, 0.3))
    assert "|a q^-nu| >= 1" in rep.notes


def test_lemma1_rejects_low_n():
    with pytest.raises(DomainError):
        lemma1_residual(1, -2, 0, 1.0, ASCParams(0.3, 0.2, 0.5))


def test_qcharlier_orthogonality_examples():
    par = CharlierParams(0.7, 0.5)
    r00 = qcharlier_orthogonality_residual(0, 0, par, tol=1e-11)
    assert r00.passed and abs(r00.rhs - qpoch_infinite(-0.7, FINE).value) < 1e-14
    assert r00.abs_residual < 1e-11
    r23 = qcharlier_orthogonality_residual(2, 3, par, tol=1e-11)
    assert r23.passed and abs(r23.lhs) < 1e-11
    r22 = qcharlier_orthogonality_residual(2, 2, CharlierParams(1.3, 0.4), tol=1e-10)
    assert r22.passed and r22.abs_residual < 1e-10


def test_qcharlier_cap_too_small():
    with pytest.raises(CapExceeded):
        qcharlier_orthogonality_residual(3, 3, CharlierParams(50.0, 0.9), cap=5)
