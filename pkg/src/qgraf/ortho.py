"""Weight function, Gauss-Legendre quadrature and orthogonality residuals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapExceeded, DomainError, DoublingCapExceeded
from .polys import ASCParams, CharlierParams, asc_table, qcharlier_eval
from .qcore import (
    SeriesValue,
    working_context,
    phi_prefactored,
    qpoch_finite,
    qpoch_infinite,
    qpoch_infinite_many,
    qpoch_ratio,
)
from .report import IdentityCase, ResidualReport

TWO_PI = 2.0 * math.pi


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights on [-1, 1]; read-only arrays, cached per order."""
    x, w = np.polynomial.legendre.leggauss(int(order))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Legendre rule on ``[lo, hi]`` with order doubling.

    Doubling starts at ``start`` and stops once two successive estimates differ
    by less than ``tol * max(1, (1/2pi) int |f|)``; scaling by the integral of
    ``|f|`` keeps the test above the rounding floor of cancelling integrands.
    Past ``max_order`` it raises
    :class:`DoublingCapExceeded`.
    """

    start: int = 16
    max_order: int = 512
    tol: float = 1e-12
    lo: float = 0.0
    hi: float = math.pi

    def __post_init__(self):
        if self.start < 1 or self.max_order < self.start:
            raise DomainError("need 1 <= start <= max_order")
        if not self.tol > 0:
            raise DomainError("tol must be positive")

    def orders(self):
        k = self.start
        while k <= self.max_order:
            yield k
            k *= 2

    def nodes(self, order: int):
        x, w = gauss_legendre(order)
        half = 0.5 * (self.hi - self.lo)
        return self.lo + half * (x + 1.0), half * w

    def full_period(self) -> "QuadratureGrid":
        return QuadratureGrid(self.start, self.max_order, self.tol, 0.0, TWO_PI)


def integrate_many(f, grid: QuadratureGrid | None = None) -> list:
    """``(1/2pi) int f`` for a vector-valued integrand.

    ``f(theta)`` returns shape ``(M, J)`` for ``J`` nodes, or ``(J,)``. All
    components are refined together; each result's ``tail_bound`` is its last
    doubling change.
    """
    grid = grid or QuadratureGrid()
    prev = None
    for order in grid.orders():
        th, w = grid.nodes(order)
        vals = np.atleast_2d(np.asarray(f(th)))
        est = vals @ w / TWO_PI
        scale = np.abs(vals) @ np.abs(w) / TWO_PI
        if prev is not None:
            change = np.abs(est - prev)
            if np.all(change < grid.tol * np.maximum(1.0, scale)):
                return [SeriesValue(complex(e), float(c), order) for e, c in zip(est, change)]
        prev = est
    raise DoublingCapExceeded(f"quadrature not converged at order {grid.max_order}")


def integrate(f, grid: QuadratureGrid | None = None) -> SeriesValue:
    """``(1/2pi) int_lo^hi f(theta) d theta`` by order doubling."""
    return integrate_many(lambda th: np.asarray(f(th)).reshape(1, -1), grid)[0]


@dataclass(frozen=True)
class WeightSpec:
    """Weight parameters plus the ``(a e^{i theta}, a e^{-i theta};q)_r`` factor."""

    par: ASCParams
    extra_r: int = 0

    def __post_init__(self):
        if not self.par.unit_disc:
            raise DomainError("the weight needs |a| < 1 and |b| < 1")
        if self.extra_r < 0:
            raise DomainError("extra_r must be nonnegative")


def _weight(theta, w: WeightSpec, ctx):
    # returns (values, relative truncation error bound)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    e = np.exp(1j * th)
    a, b = w.par.a, w.par.b
    args = np.concatenate([e * e, 1 / (e * e), a * e, a / e, b * e, b / e])
    vals, tails = qpoch_infinite_many(args, ctx)
    vals = vals.reshape(6, -1)
    tails = tails.reshape(6, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(vals != 0, tails / np.abs(vals), 0.0).sum(axis=0)
    out = vals[0] * vals[1] / (vals[2] * vals[3] * vals[4] * vals[5])
    if w.extra_r:
        fin = np.ones_like(e)
        for i in range(w.extra_r):
            qi = w.par.q ** i
            fin *= (1 - a * e * qi) * (1 - a / e * qi)
        out = out * fin
    edge = (th <= 0.0) | (th >= math.pi)
    out = np.where(edge, 0.0, out)
    return out, rel


def weight_eval(theta, w: WeightSpec, ctx=None):
    """``(e^{2i t}, e^{-2i t};q)_inf / (a e^{+-i t}, b e^{+-i t};q)_inf`` times the extra factor.

    Real for real ``a, b``; zero at the endpoints ``0`` and ``pi``.
    """
    ctx = working_context(w.par.q if ctx is None else ctx)
    out, _ = _weight(theta, w, ctx)
    if np.isrealobj(out) or np.all(np.abs(out.imag) <= 1e-13 * np.maximum(1.0, np.abs(out))):
        out = np.real(out)
    return out if np.ndim(theta) else out[0]


def _quad_with_weight(fn, w: WeightSpec, ctx, grid):
    """Integrate ``fn(theta, x) * weight``; ``fn`` returns ``(M, J)``.

    The weight truncation error is folded into each tail as
    ``max relative error * (1/2pi) int |f w|``.
    """
    state = {}

    def integrand(th):
        wt, rel = _weight(th, w, ctx)
        vals = np.atleast_2d(fn(th, np.cos(th))) * wt
        state["rel"] = max(state.get("rel", 0.0), float(np.max(rel)))
        state["abs"] = vals
        return vals

    res = integrate_many(integrand, grid)
    order = res[0].terms_used
    _, gw = grid.nodes(order)
    absint = np.abs(state["abs"]) @ gw / TWO_PI
    return [
        SeriesValue(r.value, r.tail_bound + state["rel"] * float(ai), r.terms_used)
        for r, ai in zip(res, absint)
    ]


def asc_orthogonality_rhs(k: int, par: ASCParams, ctx) -> SeriesValue:
    """``1/((q^{k+1}, ab q^k;q)_inf)``."""
    q = par.q
    den = qpoch_infinite(q ** (k + 1), ctx) * qpoch_infinite(par.a * par.b * q ** k, ctx)
    return SeriesValue(1.0) / den


def asc_orthogonality_matrix(kmax: int, par: ASCParams, grid=None, ctx=None, tol=None) -> list:
    """Reports for every ``0 <= k, l <= kmax`` from one shared quadrature."""
    ctx = working_context(par.q if ctx is None else ctx)
    grid = grid or QuadratureGrid()
    tol = 1e-9 if tol is None else tol
    w = WeightSpec(par)
    pairs = [(k, l) for k in range(kmax + 1) for l in range(kmax + 1)]

    def fn(th, x):
        tab = asc_table(kmax, x, par)
        return np.array([tab[k] * tab[l] for k, l in pairs])

    ints = _quad_with_weight(fn, w, ctx, grid)
    diag = {k: asc_orthogonality_rhs(k, par, ctx) for k in range(kmax + 1)}
    out = []
    for (k, l), lhs in zip(pairs, ints):
        rhs = diag[k] if k == l else SeriesValue(0j)
        case = IdentityCase.make("asc_ortho", k=k, l=l, a=par.a, b=par.b, q=par.q)
        out.append(ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case))
    return out


def asc_orthogonality_residual(k: int, l: int, par: ASCParams, grid=None, ctx=None, tol=None) -> ResidualReport:
    """``(1/2pi) int_0^pi S_k S_l w`` against ``delta_{kl} / (q^{k+1}, ab q^k;q)_inf``."""
    if not par.unit_disc:
        raise DomainError("orthogonality needs |a| < 1 and |b| < 1")
    ctx = working_context(par.q if ctx is None else ctx)
    grid = grid or QuadratureGrid()
    tol = 1e-9 if tol is None else tol

    def fn(th, x):
        tab = asc_table(max(k, l), x, par)
        return tab[k] * tab[l]

    lhs = _quad_with_weight(fn, WeightSpec(par), ctx, grid)[0]
    rhs = asc_orthogonality_rhs(k, par, ctx) if k == l else SeriesValue(0j)
    case = IdentityCase.make("asc_ortho", k=k, l=l, a=par.a, b=par.b, q=par.q)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case)


def lemma1_rhs(m: int, n: int, r: int, nu: float, par: ASCParams, ctx) -> SeriesValue:
    """Closed form of the weighted integral of ``S_m(.; a q^-nu, b) S_{n+m}(.; a, b)``.

    ``(-a)^-n q^{n(nu+1) + n(n-1)/2} (q^{nu+n+r+1};q)_inf / ((q^{m+1}, q^{nu+r+1}, ab q^{n+m+r};q)_inf)``
    times ``(q^{1-n};q)_inf/(q;q)_inf 3phi2(q^-r, q^{-m-n}, q^{-nu-n-r}; q^{1-n}, q^{1-m-n-r}/(ab); q, q^{r+1} a/b)``.
    The series is regularized for ``n >= 1`` and vanishes identically for ``n > r``.
    """
    q, a, b = par.q, par.a, par.b
    if a == 0 or b == 0:
        raise DomainError("closed form needs a, b != 0")
    pref = (-a) ** (-n) * q ** (n * (nu + 1) + n * (n - 1) / 2)
    ratio = qpoch_ratio(q ** (nu + n + r + 1), q ** (nu + r + 1), ctx)
    den = qpoch_infinite(q ** (m + 1), ctx) * qpoch_infinite(a * b * q ** (n + m + r), ctx)
    series = phi_prefactored(
        [q ** (-r), q ** (-m - n), q ** (-nu - n - r)],
        1 - n,
        [q ** (1 - m - n - r) / (a * b)],
        q ** (r + 1) * a / b,
        ctx,
    )
    return ratio * series / den * pref


def lemma1_group(mmax: int, r: int, nu: float, par: ASCParams, nmax: int, grid=None, ctx=None, tol=None) -> list:
    """Reports for ``0 <= m <= mmax``, ``-m <= n <= nmax`` sharing one quadrature."""
    if not par.unit_disc:
        raise DomainError("the weight needs |a| < 1 and |b| < 1")
    ctx = working_context(par.q if ctx is None else ctx)
    grid = grid or QuadratureGrid()
    tol = 1e-9 if tol is None else tol
    q = par.q
    shifted = par.with_a(par.a * q ** (-nu))
    idx = [(m, n) for m in range(mmax + 1) for n in range(-m, nmax + 1)]
    top = mmax + nmax

    def fn(th, x):
        s1 = asc_table(mmax, x, shifted)
        s2 = asc_table(top, x, par)
        return np.array([s1[m] * s2[n + m] for m, n in idx])

    ints = _quad_with_weight(fn, WeightSpec(par, r), ctx, grid)
    flag = abs(shifted.a) >= 1
    out = []
    for (m, n), lhs in zip(idx, ints):
        rhs = lemma1_rhs(m, n, r, nu, par, ctx)
        notes = ("|a q^-nu| >= 1",) if flag else ()
        if n > r:
            notes += ("structural zero n > r",)
        case = IdentityCase.make("lemma1", m=m, n=n, r=r, nu=nu, a=par.a, b=par.b, q=q)
        out.append(ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case, notes))
    return out


def lemma1_residual(m: int, n: int, r: int, nu: float, par: ASCParams, grid=None, ctx=None, tol=None) -> ResidualReport:
    """Weighted integral of ``S_m(x; a q^-nu, b) S_{n+m}(x; a, b) (a e^{+-i theta};q)_r``
    against its closed form; reports flag ``|a q^-nu| >= 1``."""
    if n < -m:
        raise DomainError("need n >= -m")
    ctx = working_context(par.q if ctx is None else ctx)
    grid = grid or QuadratureGrid()
    tol = 1e-9 if tol is None else tol
    q = par.q
    if not par.unit_disc:
        raise DomainError("the weight needs |a| < 1 and |b| < 1")
    shifted = par.with_a(par.a * q ** (-nu))

    def fn(th, x):
        return asc_table(m, x, shifted)[m] * asc_table(n + m, x, par)[n + m]

    lhs = _quad_with_weight(fn, WeightSpec(par, r), ctx, grid)[0]
    rhs = lemma1_rhs(m, n, r, nu, par, ctx)
    notes = ("|a q^-nu| >= 1",) if abs(shifted.a) >= 1 else ()
    if n > r:
        notes += ("structural zero n > r",)
    case = IdentityCase.make("lemma1", m=m, n=n, r=r, nu=nu, a=par.a, b=par.b, q=q)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case, notes)


def qcharlier_orthogonality_rhs(m: int, par: CharlierParams, ctx) -> SeriesValue:
    """``q^-m (-q/a, q;q)_m (-a;q)_inf``."""
    q, a = par.q, par.a
    fin = q ** (-m) * qpoch_finite(-q / a, q, m) * qpoch_finite(q, q, m)
    return qpoch_infinite(-a, ctx) * fin


def qcharlier_orthogonality_residual(m: int, r: int, par: CharlierParams, cap: int = 64, ctx=None, tol=None) -> ResidualReport:
    """``sum_h a^h q^{h(h-1)/2}/(q;q)_h c_m(q^-h) c_r(q^-h)`` against its diagonal value.

    Summation runs to ``h = cap``. Beyond the point where the term ratio
    ``rho`` is below one and decreasing, the remainder is bounded by
    ``|t_H| rho / (1 - rho)``; :class:`CapExceeded` if that bound is still
    above ``tol`` at the cap.
    """
    ctx = working_context(par.q if ctx is None else ctx)
    tol = 1e-10 if tol is None else tol
    q, a = par.q, par.a
    terms = []
    weight = 1.0
    for h in range(cap + 1):
        if h:
            weight *= a * q ** (h - 1) / (1 - q ** h)
        x = q ** (-h)
        terms.append(weight * qcharlier_eval(m, x, par, ctx) * qcharlier_eval(r, x, par, ctx))
    mags = [abs(t) for t in terms]
    # ratio monitored over the last few terms; superexponential decay makes it shrink
    rhos = [mags[i + 1] / mags[i] for i in range(len(mags) - 4, len(mags) - 1) if mags[i] > 0]
    rho = max(rhos) if rhos else 0.0
    if rho >= 1.0 or any(rhos[i + 1] > rhos[i] for i in range(len(rhos) - 1)):
        raise CapExceeded(f"q-Charlier sum has not started to decay by h = {cap}")
    tail = mags[-1] * rho / (1 - rho)
    if tail > tol:
        raise CapExceeded(f"q-Charlier tail bound {tail:.3g} exceeds tol at h = {cap}")
    lhs = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    rhs = qcharlier_orthogonality_rhs(m, par, ctx) if m == r else SeriesValue(0j)
    case = IdentityCase.make("charlier_ortho", m=m, r=r, a=a, q=q)
    return ResidualReport(lhs, rhs.value, tol, (tail, rhs.tail_bound), case)


__all__ = [
    "QuadratureGrid",
    "WeightSpec",
    "gauss_legendre",
    "integrate",
    "integrate_many",
    "weight_eval",
    "asc_orthogonality_rhs",
    "asc_orthogonality_residual",
    "asc_orthogonality_matrix",
    "lemma1_rhs",
    "lemma1_residual",
    "lemma1_group",
    "qcharlier_orthogonality_rhs",
    "qcharlier_orthogonality_residual",
]
