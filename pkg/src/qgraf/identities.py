"""Residual checkers for the addition formula and its relatives.

Every checker evaluates the two members of an identity along independent
paths and returns a :class:`ResidualReport`. Checkers accept either a bare
``q`` (evaluated at ``WORKING_TOL``) or a :class:`QContext`.
"""
from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np

from .errors import BranchAmbiguity, CapExceeded, DomainError, ZeroParameterPrefactor
from .ortho import QuadratureGrid, WeightSpec, _quad_with_weight, integrate
from .polys import (
    ASCParams,
    CharlierParams,
    SpectralPoint,
    asc_eval_rec,
    asc_table,
    qcharlier_eval,
)
from .qcore import (
    GrafInstance,
    QContext,
    SeriesValue,
    bessel_j,
    bessel_j_scaled,
    is_integer,
    phi,
    phi_many,
    phi_prefactored,
    phi_regularized,
    q_power_index,
    qpoch_finite,
    qpoch_infinite,
    qpoch_ratio,
    working_context,
)
from .report import IdentityCase, ResidualReport

DEFAULT_N = 40


def _ctx(q) -> QContext:
    return working_context(q)


def _point(theta=None, xi=None) -> SpectralPoint:
    if (theta is None) == (xi is None):
        raise DomainError("give exactly one of theta or xi")
    if theta is not None:
        return SpectralPoint.on_spectrum(theta)
    xi = complex(xi)
    if abs(abs(xi) - 1.0) < 1e-14:
        return SpectralPoint.on_spectrum(abs(cmath.phase(xi)))
    return SpectralPoint.off_spectrum(xi.real if xi.imag == 0 else xi)


def _geometric_tail(first: float, ratio: float) -> float:
    if first == 0.0:
        return 0.0
    return first / (1.0 - ratio) if ratio < 1.0 else math.inf


def _positive_series_bound(t0: float, ratio, cap: int = 100000) -> float:
    """Upper bound for ``sum t_k`` with ``t_{k+1} = ratio(k) t_k``, ``ratio`` nonincreasing."""
    total, t = 0.0, t0
    for k in range(cap):
        total += t
        r = ratio(k)
        if r < 0.5 and t * r < 1e-17 * total:
            return total + t * r / (1.0 - r)
        t *= r
        if not math.isfinite(t):
            return math.inf
    return math.inf


def _observed_tail(terms: list) -> tuple:
    """Geometric extrapolation from the last two nonzero terms; an estimate."""
    mags = [abs(t) for t in terms if t != 0]
    if len(mags) < 2:
        return 0.0, True
    rho = mags[-1] / mags[-2]
    if rho >= 1.0:
        return math.inf, False
    return mags[-1] * rho / (1.0 - rho), True


# ------------------------------------------------------------ addition formula


def _addition_checks(a, b, z, nu, allow_any_nu):
    if not abs(z) < 1:
        raise DomainError(f"addition formula needs |z| < 1, got |z| = {abs(z):.6g}")
    if not (abs(a) < 1 and abs(b) < 1):
        raise DomainError("addition formula needs |a| < 1 and |b| < 1")
    if isinstance(nu, complex):
        raise DomainError("nu must be real")
    if not allow_any_nu and not nu > -1:
        raise DomainError(f"nu must exceed -1 (got {nu}); pass allow_any_nu=True to override")


def addition_lhs(q, a, b, z, nu, m, theta, allow_any_nu=False) -> SeriesValue:
    """``(q^{nu+1};q)_inf/(q;q)_inf 2phi1(a e^{it}, a e^{-it}; q^{nu+1}; q, z) S_m(cos t; a q^-nu, b)``."""
    ctx = _ctx(q)
    q = ctx.q
    a, b, z, nu, m = complex(a), complex(b), complex(z), float(nu), int(m)
    _addition_checks(a, b, z, nu, allow_any_nu)
    pt = SpectralPoint.on_spectrum(theta)
    f = phi_prefactored([a * pt.xi, a / pt.xi], nu + 1, [], z, ctx)
    return f * asc_eval_rec(m, pt, ASCParams(a * q ** (-nu), b, q))


def _addition_factors(ctx, a, b, z, nu, m, n):
    q = ctx.q
    f1 = phi_prefactored([q ** (-m)], 1 + n, [], a * a * q ** (m + n - nu) * z, ctx)
    f2 = phi_prefactored([a * b * q ** (n + m), 0.0], nu + n + 1, [], z, ctx)
    return f1, f2


def _factor_bounds(ctx, a, b, z, nu, n):
    """Uniform bounds on the two prefactored series for ``n >= 0``.

    The first is ``(-|a^2 z| q^{n-nu};q)_inf / (q;q)_inf^2``: bounding
    ``|(q^-m;q)_k| <= q^{-mk + k(k-1)/2}`` term by term gives the product, and
    the prefactor ``1/(q;q)_n`` together with ``1/(q^{1+n};q)_k`` give the
    two factors ``1/(q;q)_inf``.
    """
    q = ctx.q
    b1 = qpoch_infinite(-abs(a * a * z) * q ** (n - nu), ctx) / qpoch_infinite(q, ctx) / qpoch_infinite(q, ctx)
    b2 = (
        qpoch_infinite(-(q ** (nu + 1)), ctx)
        * qpoch_infinite(-abs(a * b), ctx)
        / (qpoch_infinite(q, ctx) * qpoch_infinite(abs(z), ctx))
    )
    return abs(b1.value) + b1.tail_bound, abs(b2.value) + b2.tail_bound


@lru_cache(maxsize=4096)
def _addition_coefficients(ctx, a, b, z, nu, m, N):
    q = ctx.q
    vals, tails, violations = [], [], []
    for n in range(-m, N + 1):
        f1, f2 = _addition_factors(ctx, a, b, z, nu, m, n)
        if n >= 0:
            bd1, bd2 = _factor_bounds(ctx, a, b, z, nu, n)
            if abs(f1.value) > bd1 * (1 + 1e-12):
                violations.append((n, "1phi1", abs(f1.value), bd1))
            if abs(f2.value) > bd2 * (1 + 1e-12):
                violations.append((n, "2phi1", abs(f2.value), bd2))
        pre = (-1) ** n * a ** n * z ** n * q ** (n * (n - 1) / 2)
        t = f1 * f2 * pre
        vals.append(complex(t.value))
        tails.append(t.tail_bound)
    return np.array(vals), np.array(tails), tuple(violations)


def addition_coefficients(q, a, b, z, nu, m, N=DEFAULT_N, allow_any_nu=False):
    """Coefficients ``A_n``, ``n = -m..N``, of ``S_{n+m}(x; a, b)`` in the addition formula.

    Returns ``(values, tails, violations)``; ``violations`` lists every
    ``n >= 0`` at which a prefactored factor exceeds its uniform bound.
    Cached per parameter tuple since the coefficients do not depend on ``theta``.
    """
    ctx = _ctx(q)
    a, b, z, nu, m, N = complex(a), complex(b), complex(z), float(nu), int(m), int(N)
    _addition_checks(a, b, z, nu, allow_any_nu)
    if m < 0 or N < 1:
        raise DomainError("need m >= 0 and N >= 1")
    return _addition_coefficients(ctx, a, b, z, nu, m, N)


def addition_tail_bound(q, a, b, z, nu, m, N=DEFAULT_N) -> float:
    """Bound on ``sum_{n > N}`` of the addition formula's right member on the spectrum."""
    ctx = _ctx(q)
    q = ctx.q
    a, b, z = complex(a), complex(b), complex(z)
    az = abs(a * z)
    if az == 0:
        return 0.0
    K = N + 1
    bd1, bd2 = _factor_bounds(ctx, a, b, z, nu, K)
    cs = qpoch_infinite(-abs(a), ctx) * qpoch_infinite(-abs(b), ctx) / qpoch_infinite(q, ctx)
    cs = abs(cs.value) + cs.tail_bound
    log_first = K * math.log(az) + K * (K - 1) / 2 * math.log(q) + math.log(K + m + 1)
    first = math.exp(log_first) if log_first > -745 else 0.0
    ratio = az * q ** K * (K + m + 2) / (K + m + 1)
    return _geometric_tail(first, ratio) * bd1 * bd2 * cs


def addition_rhs(q, a, b, z, nu, m, theta, N=DEFAULT_N, allow_any_nu=False) -> SeriesValue:
    """Truncated sum ``sum_{n=-m}^N A_n S_{n+m}(cos t; a, b)`` with a rigorous tail."""
    ctx = _ctx(q)
    vals, tails, _ = addition_coefficients(ctx, a, b, z, nu, m, N, allow_any_nu)
    pt = SpectralPoint.on_spectrum(theta)
    # row k holds S_k, so rows 0..N+m line up with n = -m..N
    s = asc_table(N + int(m), pt.x, ASCParams(a, b, ctx.q))[:, 0]
    total = complex(np.sum(vals * s))
    err = float(np.sum(tails * np.abs(s))) + addition_tail_bound(ctx, a, b, z, nu, m, N)
    return SeriesValue(total, err, len(vals))


def addition_residual(q, a, b, z, nu, m, theta, N=DEFAULT_N, tol=1e-9, allow_any_nu=False) -> ResidualReport:
    ctx = _ctx(q)
    lhs = addition_lhs(ctx, a, b, z, nu, m, theta, allow_any_nu)
    rhs = addition_rhs(ctx, a, b, z, nu, m, theta, N, allow_any_nu)
    _, _, viol = addition_coefficients(ctx, a, b, z, nu, m, N, allow_any_nu)
    notes = [f"uniform bound exceeded at n={n} ({which})" for n, which, _, _ in viol]
    case = IdentityCase.make(
        "addition", q=ctx.q, a=a, b=b, z=complex(z), nu=nu, m=int(m), theta=theta, N=int(N)
    )
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case, tuple(notes))


# ------------------------------------------------------------- product formula


def product_rhs(q, a, b, z, nu, m, n, allow_any_nu=False) -> SeriesValue:
    """``A_n / (q^{n+m+1}, ab q^{n+m};q)_inf``: the ``S_{n+m}`` Fourier coefficient."""
    ctx = _ctx(q)
    q = ctx.q
    a, b, z, nu, m, n = complex(a), complex(b), complex(z), float(nu), int(m), int(n)
    _addition_checks(a, b, z, nu, allow_any_nu)
    if n < -m:
        raise DomainError("need n >= -m")
    f1, f2 = _addition_factors(ctx, a, b, z, nu, m, n)
    pre = (-1) ** n * a ** n * z ** n * q ** (n * (n - 1) / 2)
    den = qpoch_infinite(q ** (n + m + 1), ctx) * qpoch_infinite(a * b * q ** (n + m), ctx)
    return f1 * f2 * pre / den


def _lhs_on_nodes(ctx, a, b, z, nu, mmax, th, x):
    """``addition_lhs`` for ``m = 0..mmax`` at quadrature nodes; shape ``(mmax+1, J)``."""
    q = ctx.q
    e = np.exp(1j * th)
    vals, _ = phi_many([a * e, a / e], [q ** (nu + 1)], z, ctx)
    pref = qpoch_ratio(q ** (nu + 1), q, ctx).value
    S = asc_table(mmax, x, ASCParams(a * q ** (-nu), b, q))
    return pref * vals[None, :] * S


def product_residuals(q, a, b, z, nu, mmax=3, nmax=4, grid=None, tol=1e-8, allow_any_nu=False) -> list:
    """Product formula for every ``m <= mmax``, ``-m <= n <= nmax`` from one quadrature."""
    ctx = _ctx(q)
    q = ctx.q
    a, b, z, nu = complex(a), complex(b), complex(z), float(nu)
    _addition_checks(a, b, z, nu, allow_any_nu)
    grid = grid or QuadratureGrid(max_order=512)
    par = ASCParams(a, b, q)
    pairs = [(m, n) for m in range(mmax + 1) for n in range(-m, nmax + 1)]
    kmax = mmax + nmax

    def fn(th, x):
        L = _lhs_on_nodes(ctx, a, b, z, nu, mmax, th, x)
        S = asc_table(kmax, x, par)
        return np.array([L[m] * S[n + m] for m, n in pairs])

    quad = _quad_with_weight(fn, WeightSpec(par), ctx, grid)
    out = []
    for (m, n), lhs in zip(pairs, quad):
        rhs = product_rhs(ctx, a, b, z, nu, m, n, allow_any_nu)
        case = IdentityCase.make("product", q=q, a=a, b=b, z=z, nu=nu, m=m, n=n)
        out.append(
            ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case,
                           (f"quadrature order {lhs.terms_used}",))
        )
    return out


def product_residual(q, a, b, z, nu, m, n, grid=None, tol=1e-8, allow_any_nu=False) -> ResidualReport:
    ctx = _ctx(q)
    q = ctx.q
    a, b, z, nu, m, n = complex(a), complex(b), complex(z), float(nu), int(m), int(n)
    _addition_checks(a, b, z, nu, allow_any_nu)
    if m < 0 or n < -m:
        raise DomainError("need m >= 0 and n >= -m")
    grid = grid or QuadratureGrid(max_order=512)
    par = ASCParams(a, b, q)

    def fn(th, x):
        L = _lhs_on_nodes(ctx, a, b, z, nu, m, th, x)[m]
        return (L * asc_table(n + m, x, par)[n + m])[None, :]

    lhs = _quad_with_weight(fn, WeightSpec(par), ctx, grid)[0]
    rhs = product_rhs(ctx, a, b, z, nu, m, n, allow_any_nu)
    case = IdentityCase.make("product", q=q, a=a, b=b, z=z, nu=nu, m=m, n=n)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case,
                          (f"quadrature order {lhs.terms_used}",))


def addition_resynthesis(q, a, b, z, nu, m, theta, N=12, grid=None, tol=1e-9) -> list:
    """Expand ``addition_lhs`` in the ``S_{n+m}(x; a, b)`` basis by quadrature.

    Returns one report per ``n = -m..N`` comparing the quadrature coefficient
    with the closed-form ``A_n``, followed by one comparing the resynthesized
    sum at ``theta`` with ``addition_lhs``.
    """
    ctx = _ctx(q)
    q = ctx.q
    a, b, z, nu, m = complex(a), complex(b), complex(z), float(nu), int(m)
    _addition_checks(a, b, z, nu, False)
    grid = grid or QuadratureGrid(max_order=512)
    par = ASCParams(a, b, q)
    ns = list(range(-m, N + 1))

    def fn(th, x):
        L = _lhs_on_nodes(ctx, a, b, z, nu, m, th, x)[m]
        return L[None, :] * asc_table(N + m, x, par)

    quad = _quad_with_weight(fn, WeightSpec(par), ctx, grid)
    vals, tails, _ = addition_coefficients(ctx, a, b, z, nu, m, N)
    pt = SpectralPoint.on_spectrum(theta)
    S_at = asc_table(N + m, pt.x, par)[:, 0]
    out = []
    synth, synth_err = 0j, 0.0
    for n, A, At in zip(ns, vals, tails):
        norm = qpoch_infinite(q ** (n + m + 1), ctx) * qpoch_infinite(a * b * q ** (n + m), ctx)
        c = quad[n + m] * norm
        case = IdentityCase.make("resynthesis_coeff", q=q, a=a, b=b, z=z, nu=nu, m=m, n=n)
        out.append(ResidualReport(c.value, A, tol, (c.tail_bound, float(At)), case))
        synth += c.value * S_at[n + m]
        synth_err += c.tail_bound * abs(S_at[n + m])
    synth_err += addition_tail_bound(ctx, a, b, z, nu, m, N)
    lhs = addition_lhs(ctx, a, b, z, nu, m, theta)
    case = IdentityCase.make("resynthesis", q=q, a=a, b=b, z=z, nu=nu, m=m, theta=theta, N=N)
    out.append(ResidualReport(lhs.value, synth, tol, (lhs.tail_bound, synth_err), case))
    return out


# ------------------------------------------------------------ product of series


def lemma2_residual(a, b, c, d, z, mu, nu, q, tol=1e-10) -> ResidualReport:
    """Product of ``1phi1(a; q^{mu+1}; bz)`` and ``2phi1(c, 0; q^{nu+1}; dz)`` (both
    prefactored) against its double-sum expansion.

    The outer sum over ``p`` runs until three consecutive terms are negligible;
    its tail is extrapolated from the observed term ratio.
    """
    ctx = _ctx(q)
    q = ctx.q
    a, b, c, d, z = (complex(v) for v in (a, b, c, d, z))
    mu, nu = float(mu), float(nu)
    if not abs(d * z) < 1:
        raise DomainError("need |dz| < 1")
    if c == 0 or d == 0:
        raise ZeroParameterPrefactor("the expansion divides by c and d")
    lhs = phi_prefactored([a], mu + 1, [], b * z, ctx) * phi_prefactored([c, 0.0], nu + 1, [], d * z, ctx)
    pref = qpoch_ratio(q ** (nu + 1), q, ctx)
    total, err, terms, small = 0j, 0.0, [], 0
    for p in range(ctx.max_terms):
        inner = phi_prefactored(
            [q ** (-p), q ** (-p - nu), a], mu + 1, [q ** (1 - p) / c], b * q ** (nu + p + 1) / (d * c), ctx
        )
        w = (d * z) ** p * qpoch_finite(c, q, p) / (qpoch_finite(q, q, p) * qpoch_finite(q ** (nu + 1), q, p))
        t = inner * w
        total += t.value
        err += t.tail_bound
        terms.append(t.value)
        if abs(t.value) < ctx.tol * max(1.0, abs(total)):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
    else:
        raise CapExceeded(f"outer sum not settled within {ctx.max_terms} terms")
    rhs = pref * SeriesValue(total, err, len(terms))
    est, _ = _observed_tail(terms)
    rhs_tail = rhs.tail_bound + abs(pref.value) * est
    case = IdentityCase.make("lemma2", a=a, b=b, c=c, d=d, z=z, mu=mu, nu=nu, q=q)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs_tail), case,
                          ("outer tail extrapolated from the observed term ratio",))


def series_inversion_residual(p, a, b, c, d, z, q, tol=1e-11) -> ResidualReport:
    """Terminating ``3phi2(q^-p, a, b; c, d; q, z)`` against its reversed-order form

    ``(a,b;q)_p/(c,d;q)_p (-z)^p q^{-p(p+1)/2}
    3phi2(q^-p, q^{1-p}/c, q^{1-p}/d; q^{1-p}/a, q^{1-p}/b; q, cd q^{p+1}/(abz))``.
    """
    ctx = _ctx(q)
    q = ctx.q
    p = int(p)
    a, b, c, d, z = (complex(v) for v in (a, b, c, d, z))
    if p < 0:
        raise DomainError("p must be nonnegative")
    lhs = phi([q ** (-p), a, b], [c, d], z, ctx)
    if p == 0:
        rhs = SeriesValue(1.0 + 0j)
    else:
        if a * b * z == 0:
            raise ZeroParameterPrefactor("the reversed form divides by a b z")
        for v in (a, b, c, d):
            if v == 0:
                raise ZeroParameterPrefactor("the reversed form divides by every parameter")
        pre = qpoch_finite(a, q, p) * qpoch_finite(b, q, p) / (qpoch_finite(c, q, p) * qpoch_finite(d, q, p))
        pre *= (-z) ** p * q ** (-p * (p + 1) / 2)
        rev = phi(
            [q ** (-p), q ** (1 - p) / c, q ** (1 - p) / d],
            [q ** (1 - p) / a, q ** (1 - p) / b],
            c * d * q ** (p + 1) / (a * b * z),
            ctx,
        )
        rhs = rev * pre
    case = IdentityCase.make("inversion", p=p, a=a, b=b, c=c, d=d, z=z, q=q)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case)


def heine_b0_residual(a, c, z, q, tol=1e-11) -> ResidualReport:
    """``2phi1(a, 0; c; q, z) = 1phi1(c/a; c; q, az) / (z;q)_inf``.

    At ``a = 0`` the right member is its limit ``0phi1(-; c; q, cz) / (z;q)_inf``.
    """
    ctx = _ctx(q)
    q = ctx.q
    a, c, z = complex(a), complex(c), complex(z)
    if not abs(z) < 1:
        raise DomainError("need |z| < 1")
    lhs = phi([a, 0.0], [c], z, ctx)
    zq = qpoch_infinite(z, ctx)
    notes = ()
    if a == 0:
        rhs = phi([], [c], c * z, ctx) / zq
        notes = ("a = 0 limit of the right member",)
    else:
        rhs = phi([c / a], [c], a * z, ctx) / zq
    case = IdentityCase.make("heine0", a=a, c=c, z=z, q=q)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case, notes)


# --------------------------------------------------- Jackson q-Bessel addition


def _ks_yfactor(ctx, nu_n, y):
    """``y^k (q^{k+1};q)_inf/(q;q)_inf 2phi1(0, 0; q^{k+1}; q, -y^2)`` with ``0^0 = 1``."""
    if y == 0:
        return SeriesValue(1.0 + 0j if nu_n == 0 else 0j)
    f = phi_prefactored([0.0, 0.0], nu_n + 1, [], -y * y, ctx)
    return f * (y ** nu_n)


def _ks_xfactor(ctx, n, x):
    """``x^n q^{n(n-1)/2} (q^{n+1};q)_inf/(q;q)_inf 0phi1(-; q^{n+1}; q, -x^2 q^n)``."""
    q = ctx.q
    if x == 0:
        return SeriesValue(1.0 + 0j if n == 0 else 0j)
    g = phi_prefactored([], n + 1, [], -x * x * q ** n, ctx)
    return g * (x ** n * q ** (n * (n - 1) / 2))


def _ks_nu(nu, allow_nonint):
    if is_integer(nu):
        return int(round(nu))
    if not allow_nonint:
        raise DomainError(f"the Jackson q-Bessel addition formula is proved for integer nu only, got {nu}")
    return float(nu)


def ks_lhs(nu, x, y, s, q, allow_nonint=False) -> SeriesValue:
    """Left member of the Jackson q-Bessel addition formula.

    ``y^nu (w;q)_inf/(q^nu w;q)_inf (q^{nu+1};q)_inf/(q;q)_inf
    2phi1(q^nu w, xs/y; q^{nu+1}; q, -y^2)`` with ``w = x/(ys)``. At ``y = 0`` it is
    the limit ``(-x/s)^nu q^{nu(nu-1)/2}`` times the ``x`` factor of index ``nu``.
    """
    ctx = _ctx(q)
    q = ctx.q
    nu = _ks_nu(nu, allow_nonint)
    x, y, s = complex(x), complex(y), complex(s)
    if s == 0:
        raise DomainError("s must be nonzero")
    if not abs(y) < 1:
        raise DomainError("need |y| < 1")
    if y == 0:
        if x == 0:
            return SeriesValue(1.0 + 0j if nu == 0 else 0j)
        g = phi_prefactored([], nu + 1, [], -x * x * q ** nu, ctx)
        return g * ((-x / s) ** nu * q ** (nu * (nu - 1) / 2))
    w = x / (y * s)
    ratio = qpoch_ratio(w, q ** nu * w, ctx) if w != 0 else SeriesValue(1.0 + 0j)
    f = phi_prefactored([q ** nu * w, x * s / y], nu + 1, [], -y * y, ctx)
    return f * ratio * (y ** nu)


def _ks_tails(ctx, nu, x, y, s, N):
    """Bounds on the omitted ``n > N`` and ``n < -N`` parts of the bilateral sum."""
    q = ctx.q
    ax, ay, as_ = abs(x), abs(y), abs(s)
    if ax == 0 or ay == 0:
        return 0.0, 0.0
    if not is_integer(nu):
        return math.inf, math.inf
    bf = _positive_series_bound(1.0, lambda k: ay * ay / (1 - q ** (k + 1)) ** 2)
    bg = _positive_series_bound(1.0, lambda k: ax * ax * q ** (2 * k) / (1 - q ** (k + 1)) ** 2)
    qq = lambda k: abs(qpoch_finite(q, q, k))  # noqa: E731
    K = N + 1
    if K + nu < 0:
        return math.inf, math.inf
    first = as_ ** K * ay ** (nu + K) * ax ** K * q ** (K * (K - 1) / 2) / (qq(nu + K) * qq(K))
    rho = as_ * ay * ax * q ** K / ((1 - q ** (nu + K + 1)) * (1 - q ** (K + 1)))
    pos = _geometric_tail(first, rho) * bf * bg
    if K - nu < 0:
        return pos, math.inf
    first = as_ ** (-K) * ay ** (K - nu) * ax ** K * q ** (K * (K - 1) / 2) / (qq(K - nu) * qq(K))
    rho = ay * ax / as_ * q ** K / ((1 - q ** (K - nu + 1)) * (1 - q ** (K + 1)))
    neg = _geometric_tail(first, rho) * bf * bg
    return pos, neg


def ks_rhs(nu, x, y, s, q, N=DEFAULT_N, allow_nonint=False) -> SeriesValue:
    """Bilateral sum truncated to ``|n| <= N``, summed as two one-sided sums."""
    ctx = _ctx(q)
    nu = _ks_nu(nu, allow_nonint)
    x, y, s = complex(x), complex(y), complex(s)
    if s == 0:
        raise DomainError("s must be nonzero")
    if not abs(y) < 1:
        raise DomainError("need |y| < 1")
    sides = []
    for ns in (range(0, N + 1), range(-1, -N - 1, -1)):
        acc = SeriesValue(0j)
        for n in ns:
            acc = acc + _ks_yfactor(ctx, nu + n, y) * _ks_xfactor(ctx, n, x) * (s ** n)
        sides.append(acc)
    pos, neg = _ks_tails(ctx, nu, x, y, s, N)
    total = sides[0] + sides[1]
    return SeriesValue(total.value, total.tail_bound + pos + neg, 2 * N + 1)


def ks_addition_residual(nu, x, y, s, q, N=DEFAULT_N, tol=1e-9, allow_nonint=False) -> ResidualReport:
    ctx = _ctx(q)
    lhs = ks_lhs(nu, x, y, s, ctx, allow_nonint)
    rhs = ks_rhs(nu, x, y, s, ctx, N, allow_nonint)
    notes = () if is_integer(nu) else ("formal: non-integer nu is not a proved case",)
    case = IdentityCase.make("ks", nu=nu, x=complex(x), y=complex(y), s=complex(s), q=ctx.q, N=N)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case, notes)


# ------------------------------------------------------ Hansen-Lommel relations


def hansen_lommel_q_sum(p, m, z, q, N=DEFAULT_N) -> SeriesValue:
    """``sum_{n >= -m} (-z)^n q^{n(n-1)/2} (q;q)_{n+m}`` times the two prefactored
    series of the addition formula at ``a = b = q^{1/2}``, ``nu = p``."""
    ctx = _ctx(q)
    q = ctx.q
    p, m, z = int(p), int(m), complex(z)
    if not abs(z) < 1:
        raise DomainError("need |z| < 1")
    if m < 0 or p > m:
        raise DomainError("need m >= 0 and p <= m")
    acc = SeriesValue(0j)
    for n in range(-m, N + 1):
        f1 = phi_prefactored([q ** (-m)], n + 1, [], q ** (1 + m + n - p) * z, ctx)
        f2 = phi_prefactored([q ** (n + m + 1), 0.0], n + p + 1, [], z, ctx)
        pre = (-z) ** n * q ** (n * (n - 1) / 2) * qpoch_finite(q, q, n + m)
        acc = acc + f1 * f2 * pre
    K = N + 1
    az = abs(z)
    if az == 0:
        return acc
    b1 = qpoch_infinite(-az * q ** (1 + K - p), ctx)
    b2 = (qpoch_infinite(-(q ** (p + 1)), ctx) * qpoch_infinite(-q, ctx)
          / (qpoch_infinite(q, ctx) * qpoch_infinite(az, ctx)))
    first = az ** K * q ** (K * (K - 1) / 2)
    tail = _geometric_tail(first, az * q ** K) * (abs(b1.value) + b1.tail_bound) * (abs(b2.value) + b2.tail_bound)
    return SeriesValue(acc.value, acc.tail_bound + tail, acc.terms_used)


def hansen_lommel_q_residual(p, m, z, q, N=DEFAULT_N, tol=1e-10) -> ResidualReport:
    ctx = _ctx(q)
    lhs = hansen_lommel_q_sum(p, m, z, ctx, N)
    rhs = qpoch_finite(ctx.q, ctx.q, int(m)) if int(p) == 0 else 0j
    case = IdentityCase.make("hansen_lommel_q", p=int(p), m=int(m), z=complex(z), q=ctx.q, N=N)
    return ResidualReport(lhs.value, rhs, tol, (lhs.tail_bound, 0.0), case)


def _jn_bound(n: int, z: float) -> float:
    # |J_n(z)| <= |z/2|^|n| / |n|! for integer n and real z
    n = abs(n)
    return math.exp(n * math.log(abs(z) / 2) - math.lgamma(n + 1)) if z != 0 else float(n == 0)


def hansen_lommel_classical_residual(p, z, M=DEFAULT_N, tol=1e-11) -> ResidualReport:
    """``sum_n J_n(z) J_{n+p}(z) = delta_{0,p}`` truncated to ``|n| <= M``."""
    p, z = int(p), float(z)
    total = math.fsum(bessel_j(n, z) * bessel_j(n + p, z) for n in range(-M, M + 1))
    tail = 0.0
    for sign in (1, -1):
        k = M + 1
        while True:
            t = _jn_bound(sign * k, z) * _jn_bound(sign * k + p, z)
            tail += t
            if t < 1e-30 * max(tail, 1e-300) or k > M + 400:
                break
            k += 1
    case = IdentityCase.make("hansen_lommel", p=p, z=z, M=M)
    return ResidualReport(total, float(p == 0), tol, (0.0, tail), case)


# ------------------------------------------------ q-Charlier extension formulas


def _zphi21(ctx, A1, B1, c, Z) -> SeriesValue:
    """``(q^c, Z;q)_inf 2phi1(A1, B1; q^c; q, Z)``, continued by Heine when ``|Z| >= 1``."""
    q = ctx.q
    term = any(k is not None and k >= 0 for k in (q_power_index(A1, q), q_power_index(B1, q)))
    if term or abs(Z) < 1:
        if is_integer(c, 1e-12):
            core = phi_regularized([A1, B1], 1 - int(round(c)), [], Z, ctx)
        else:
            core = qpoch_infinite(q ** c, ctx) * phi([A1, B1], [q ** c], Z, ctx)
        return core * qpoch_infinite(Z, ctx)
    # Heine: 2phi1(A,B;C;Z) = (B, AZ;q)_inf/(C, Z;q)_inf 2phi1(C/B, Z; AZ; q, B)
    if abs(A1) < abs(B1):
        A1, B1 = B1, A1
    if not abs(B1) < 1:
        raise DomainError("continuation needs an upper parameter of modulus < 1")
    C = q ** c
    return qpoch_infinite(B1, ctx) * qpoch_infinite(A1 * Z, ctx) * phi([C / B1, Z], [A1 * Z], B1, ctx)


def _charlier_checks(m, r, alpha, beta):
    if int(m) < 0 or int(r) < 0:
        raise DomainError("degrees must be nonnegative")
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")


def qcharlier_extension_lhs(m, r, mu, alpha, beta, q, theta=None, xi=None, N=60) -> SeriesValue:
    """``sum_h (ab)^{h/2} q^{h(mu+1)/2} q^{h(h-1)/2}/(q;q)_h (q^{1+h+mu};q)_inf/(q;q)_inf
    c_m(q^-h; alpha) c_r(q^{-h-mu}; beta) S_h(x; A, B)``."""
    ctx = _ctx(q)
    q = ctx.q
    mu, alpha, beta = float(mu), float(alpha), float(beta)
    _charlier_checks(m, r, alpha, beta)
    pt = _point(theta, xi)
    A = q ** ((mu + 1) / 2) * math.sqrt(alpha / beta)
    B = q ** ((mu + 1) / 2) * math.sqrt(beta / alpha)
    S = asc_table(N, pt.x, ASCParams(A, B, q))[:, 0]
    pa, pb = CharlierParams(alpha, q), CharlierParams(beta, q)
    terms, err = [], 0.0
    for h in range(N + 1):
        w = qpoch_ratio(q ** (1 + h + mu), q, ctx)
        c = (alpha * beta) ** (h / 2) * q ** (h * (mu + 1) / 2 + h * (h - 1) / 2) / qpoch_finite(q, q, h)
        t = w * (c * qcharlier_eval(m, q ** (-h), pa, ctx) * qcharlier_eval(r, q ** (-h - mu), pb, ctx) * S[h])
        terms.append(complex(t.value))
        err += t.tail_bound
    est, _ = _observed_tail(terms)
    return SeriesValue(math.fsum(t.real for t in terms) + 1j * math.fsum(t.imag for t in terms), err + est, N + 1)


def qcharlier_extension_rhs(m, r, mu, alpha, beta, q, theta=None, xi=None) -> SeriesValue:
    ctx = _ctx(q)
    q = ctx.q
    m, r = int(m), int(r)
    mu, alpha, beta = float(mu), float(alpha), float(beta)
    _charlier_checks(m, r, alpha, beta)
    pt = _point(theta, xi)
    A = q ** ((mu + 1) / 2) * math.sqrt(alpha / beta)
    B = q ** ((mu + 1) / 2) * math.sqrt(beta / alpha)
    Z = -beta * q ** (-r)
    g = _zphi21(ctx, A * pt.xi, A / pt.xi, 1 + m - r + mu, Z) / qpoch_infinite(q, ctx)
    pre = (-1) ** (m + r) * q ** (m * (m + mu) / 2 + r * (r - m - mu)) * alpha ** (-m / 2) * beta ** (m / 2 - r)
    a2 = q ** (r - m + (1 - mu) / 2) * math.sqrt(alpha / beta)
    return g * (pre * asc_eval_rec(m, pt, ASCParams(a2, B, q)))


def qcharlier_extension_residual(m, r, mu, alpha, beta, q, theta=None, xi=None, N=60, tol=1e-9) -> ResidualReport:
    """Extension of the q-Charlier orthogonality carrying an Al-Salam-Chihara factor.

    Give ``theta`` for a point on the spectrum or a real ``xi`` with ``0 < |xi| < 1``.
    """
    ctx = _ctx(q)
    lhs = qcharlier_extension_lhs(m, r, mu, alpha, beta, ctx, theta, xi, N)
    rhs = qcharlier_extension_rhs(m, r, mu, alpha, beta, ctx, theta, xi)
    where = {"theta": theta} if theta is not None else {"xi": xi}
    case = IdentityCase.make("charlier_ext", m=int(m), r=int(r), mu=mu, alpha=alpha, beta=beta, q=ctx.q, N=N, **where)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case,
                          ("h-sum tail extrapolated from the observed term ratio",))


def qcharlier_extension_special_lhs(m, r, mu, alpha, beta, q, N=60) -> SeriesValue:
    ctx = _ctx(q)
    q = ctx.q
    mu, alpha, beta = float(mu), float(alpha), float(beta)
    _charlier_checks(m, r, alpha, beta)
    pa, pb = CharlierParams(alpha, q), CharlierParams(beta, q)
    terms = []
    for h in range(N + 1):
        c = alpha ** h * q ** (h * (h - 1) / 2) / qpoch_finite(q, q, h)
        terms.append(c * qcharlier_eval(m, q ** (-h), pa, ctx) * qcharlier_eval(r, q ** (-h - mu), pb, ctx))
    est, _ = _observed_tail(terms)
    return SeriesValue(math.fsum(t.real for t in terms) + 1j * math.fsum(t.imag for t in terms), est, N + 1)


def qcharlier_extension_special_rhs(m, r, mu, alpha, beta, q) -> SeriesValue:
    ctx = _ctx(q)
    q = ctx.q
    m, r = int(m), int(r)
    mu, alpha, beta = float(mu), float(alpha), float(beta)
    _charlier_checks(m, r, alpha, beta)
    Z = -beta * q ** (-r)
    g = _zphi21(ctx, q ** (mu + 1), alpha / beta, 1 + m - r + mu, Z) / qpoch_infinite(q ** (1 + mu), ctx)
    pre = (-1) ** (m + r) * q ** (m * (m - 1) / 2 + r * (r - m - mu)) * beta ** (-r)
    return g * (pre * qpoch_finite(q ** (1 + r - m), q, m))


def qcharlier_extension_special_residual(m, r, mu, alpha, beta, q, N=60, tol=1e-9) -> ResidualReport:
    """``sum_h alpha^h q^{h(h-1)/2}/(q;q)_h c_m(q^-h; alpha) c_r(q^{-h-mu}; beta)`` in closed form."""
    ctx = _ctx(q)
    lhs = qcharlier_extension_special_lhs(m, r, mu, alpha, beta, ctx, N)
    rhs = qcharlier_extension_special_rhs(m, r, mu, alpha, beta, ctx)
    case = IdentityCase.make("charlier_ext_special", m=int(m), r=int(r), mu=mu, alpha=alpha, beta=beta, q=ctx.q, N=N)
    return ResidualReport(lhs.value, rhs.value, tol, (lhs.tail_bound, rhs.tail_bound), case)


# ------------------------------------------------------------ classical Graf


def _graf_check(inst: GrafInstance):
    if is_integer(inst.nu):
        return
    if not inst.x > 0:
        raise DomainError("non-integer order needs x > 0")
    if not abs(inst.y) < abs(inst.x):
        raise DomainError("non-integer order needs |y| < |x|")


def graf_lhs_value(nu, x, y, psi) -> complex:
    """``J_nu(R) ((x - y e^{-i psi})/(x - y e^{i psi}))^{nu/2}``, ``R^2 = x^2 + y^2 - 2xy cos psi``.

    Written as ``u^nu J_nu(R)/R^nu`` with ``u = x - y e^{-i psi}``, which is
    entire in ``R`` for integer ``nu``.
    """
    nu, x, y, psi = float(nu), float(x), float(y), float(psi)
    u = x - y * cmath.exp(-1j * psi)
    R = abs(u)
    if is_integer(nu):
        n = int(round(nu))
        if n >= 0:
            return u ** n * bessel_j_scaled(n, R)
        return (-1) ** n * u.conjugate() ** (-n) * bessel_j_scaled(-n, R)
    if R == 0:
        raise BranchAmbiguity("x^2 + y^2 - 2xy cos(psi) vanishes; the phase factor is undefined")
    return u ** nu * bessel_j_scaled(nu, R)


def graf_classical_residual(inst: GrafInstance, M=DEFAULT_N, tol=1e-10) -> ResidualReport:
    _graf_check(inst)
    nu, x, y, psi = inst.nu, inst.x, inst.y, inst.psi
    lhs = graf_lhs_value(nu, x, y, psi)
    terms = {k: bessel_j(nu + k, x) * bessel_j(k, y) * cmath.exp(1j * k * psi) for k in range(-M, M + 1)}
    rhs = math.fsum(t.real for t in terms.values()) + 1j * math.fsum(t.imag for t in terms.values())
    pos, _ = _observed_tail([terms[k] for k in range(M - 1, M + 1)])
    neg, _ = _observed_tail([terms[-k] for k in range(M - 1, M + 1)])
    case = IdentityCase.make("graf", nu=nu, x=x, y=y, psi=psi, M=M)
    return ResidualReport(lhs, rhs, tol, (0.0, pos + neg), case,
                          ("bilateral tail extrapolated from the last two terms",))


def graf_product_classical_residual(inst: GrafInstance, grid=None, tol=1e-9) -> ResidualReport:
    """``J_{nu+m}(x) J_m(y)`` against the Fourier coefficient of the Graf left member."""
    _graf_check(inst)
    nu, x, y, m = inst.nu, inst.x, inst.y, inst.m
    grid = (grid or QuadratureGrid(max_order=512)).full_period()

    def f(psi):
        return np.array([graf_lhs_value(nu, x, y, t) * cmath.exp(-1j * m * t) for t in psi])

    rhs = integrate(f, grid)
    lhs = bessel_j(nu + m, x) * bessel_j(m, y)
    case = IdentityCase.make("graf_product", nu=nu, x=x, y=y, m=m)
    return ResidualReport(lhs, rhs.value, tol, (0.0, rhs.tail_bound), case,
                          (f"quadrature order {rhs.terms_used}",))


# ------------------------------------------------------------ limit experiments


def q_to_1_limit_table(inst: GrafInstance, q_schedule=(0.9, 0.99, 0.999), N=DEFAULT_N) -> list:
    """Jackson q-Bessel addition formula at ``x, y -> (1-q)x, (1-q)y`` against classical Graf.

    The classical target is Graf's formula at ``(nu, 2y, 2x, psi)``. Each row
    holds both members and their deviations from the target.
    """
    if not is_integer(inst.nu):
        raise DomainError("the q -> 1 table needs integer nu")
    nu = int(round(inst.nu))
    target = graf_lhs_value(nu, 2 * inst.y, 2 * inst.x, inst.psi)
    rows = []
    for q in q_schedule:
        ctx = QContext(float(q), tol=1e-15, max_terms=100000, max_product_factors=200000)
        x, y = (1 - ctx.q) * inst.x, (1 - ctx.q) * inst.y
        lhs = ks_lhs(nu, x, y, inst.s, ctx).value
        rhs = ks_rhs(nu, x, y, inst.s, ctx, N).value
        rows.append(
            dict(q=ctx.q, lhs=complex(lhs), rhs=complex(rhs), target=complex(target),
                 dev_lhs=abs(lhs - target), dev_rhs=abs(rhs - target),
                 deviation=max(abs(lhs - target), abs(rhs - target)))
        )
    return rows


def asc_ratio_limit_diagnostic(xi, a, b, q, nu, n, m_schedule=(10, 20, 40, 80)) -> list:
    """``S_{n+m}(x; a, b)/S_m(x; a q^-nu, b)`` against ``xi^-n (a xi;q)_inf/(a q^-nu xi;q)_inf``."""
    ctx = _ctx(q)
    q = ctx.q
    pt = SpectralPoint.off_spectrum(xi)
    a, b, nu, n = complex(a), complex(b), float(nu), int(n)
    limit = pt.xi ** (-n) * qpoch_ratio(a * pt.xi, a * q ** (-nu) * pt.xi, ctx).value
    mmax = max(m_schedule)
    top = asc_table(mmax + n, pt.x, ASCParams(a, b, q))[:, 0]
    bot = asc_table(mmax, pt.x, ASCParams(a * q ** (-nu), b, q))[:, 0]
    rows = []
    for m in m_schedule:
        ratio = complex(top[m + n] / bot[m])
        rows.append(dict(m=int(m), ratio=ratio, limit=complex(limit), deviation=abs(ratio - limit)))
    return rows


__all__ = [
    "addition_lhs",
    "addition_rhs",
    "addition_coefficients",
    "addition_tail_bound",
    "addition_residual",
    "product_rhs",
    "product_residual",
    "product_residuals",
    "addition_resynthesis",
    "lemma2_residual",
    "series_inversion_residual",
    "heine_b0_residual",
    "ks_lhs",
    "ks_rhs",
    "ks_addition_residual",
    "hansen_lommel_q_sum",
    "hansen_lommel_q_residual",
    "hansen_lommel_classical_residual",
    "qcharlier_extension_lhs",
    "qcharlier_extension_rhs",
    "qcharlier_extension_residual",
    "qcharlier_extension_special_lhs",
    "qcharlier_extension_special_rhs",
    "qcharlier_extension_special_residual",
    "graf_lhs_value",
    "graf_classical_residual",
    "graf_product_classical_residual",
    "q_to_1_limit_table",
    "asc_ratio_limit_diagnostic",
]
