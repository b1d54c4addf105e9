"""Al-Salam-Chihara, q-Charlier and q-Laguerre polynomials."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, PoleInLowerParameter, ZeroParameterPrefactor
from .qcore import (
    QContext,
    as_context,
    working_context,
    phi,
    qpoch_finite,
    qpoch_infinite,
)
from .report import IdentityCase, ResidualReport

# binary64 result of the defining sum is kept while sum|t_k| / |sum t_k| stays below this
CANCELLATION_LIMIT = 1e4


@dataclass(frozen=True)
class ASCParams:
    """Parameters ``(a, b, q)`` of the Al-Salam-Chihara family."""

    a: complex
    b: complex
    q: float

    def __post_init__(self):
        QContext(self.q)
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "q", float(self.q))

    @property
    def unit_disc(self) -> bool:
        return abs(self.a) < 1 and abs(self.b) < 1

    def swapped(self) -> "ASCParams":
        return ASCParams(self.b, self.a, self.q)

    def with_a(self, a) -> "ASCParams":
        return ASCParams(a, self.b, self.q)


@dataclass(frozen=True)
class SpectralPoint:
    """``x = (xi + 1/xi)/2``; on the spectrum ``xi = e^{i theta}``."""

    x: float
    xi: complex
    theta: float | None = None

    @classmethod
    def on_spectrum(cls, theta: float) -> "SpectralPoint":
        theta = float(theta)
        if not 0.0 <= theta <= math.pi:
            raise DomainError(f"theta must lie in [0, pi], got {theta}")
        return cls(math.cos(theta), cmath.exp(1j * theta), theta)

    @classmethod
    def off_spectrum(cls, xi: float) -> "SpectralPoint":
        if isinstance(xi, complex) and xi.imag != 0:
            raise DomainError("off-spectrum points use real xi")
        xi = float(xi.real if isinstance(xi, complex) else xi)
        if not 0.0 < abs(xi) < 1.0:
            raise DomainError(f"off-spectrum points need 0 < |xi| < 1, got {xi}")
        return cls(0.5 * (xi + 1.0 / xi), complex(xi), None)

    @property
    def on(self) -> bool:
        return self.theta is not None


def _point(p) -> SpectralPoint:
    return p if isinstance(p, SpectralPoint) else SpectralPoint.on_spectrum(p)


def _asc_def_terms(n, x, par: ASCParams):
    # terms of the terminating 3phi2 with the conjugate pair
    # (1 - a xi q^k)(1 - a q^k / xi) written as 1 - 2 a x q^k + a^2 q^{2k}
    q, a, b = par.q, par.a, par.b
    t = 1.0 + 0j
    terms = [t]
    for k in range(n):
        qk = q ** k
        den = (1 - qk * q) * (1 - a * b * qk)
        if den == 0:
            raise PoleInLowerParameter(f"ab q^{k} = 1 in the defining sum")
        t *= (1 - q ** (k - n)) * (1 - 2 * a * x * qk + a * a * qk * qk) * q / den
        terms.append(t)
    s = complex(math.fsum(u.real for u in terms), math.fsum(u.imag for u in terms))
    return s, math.fsum(abs(u) for u in terms)


def _asc_def_terms_mp(n, p: SpectralPoint, par: ASCParams, dps: int):
    import mpmath

    with mpmath.workdps(dps):
        q = mpmath.mpf(par.q)
        a, b = mpmath.mpc(par.a), mpmath.mpc(par.b)
        if p.on:
            x = mpmath.cos(mpmath.mpf(p.theta))
        else:
            xi = mpmath.mpf(p.xi.real)
            x = (xi + 1 / xi) / 2
        t = mpmath.mpc(1)
        s = mpmath.mpc(0)
        abs_sum = mpmath.mpf(0)
        for k in range(n + 1):
            s += t
            abs_sum += abs(t)
            if k == n:
                break
            qk = q ** k
            t *= (1 - q ** (k - n)) * (1 - 2 * a * x * qk + a * a * qk * qk) * q
            t /= (1 - qk * q) * (1 - a * b * qk)
        pref = a ** (-n)
        for i in range(n):
            pref *= 1 - a * b * q ** i
        val = pref * s
        kappa = abs_sum / abs(s) if s != 0 else mpmath.inf
        return complex(val), float(kappa)


def asc_eval_def(n: int, p, par: ASCParams, ctx=None) -> complex:
    """``S_n(x; a, b | q) = a^{-n} (ab;q)_n 3phi2(q^-n, a xi, a/xi; ab, 0; q, q)``.

    The conjugate pair ``(a xi, a/xi;q)_k`` is multiplied out as a quadratic in
    ``x``, so real parameters give a real sum. ``ctx`` is accepted for symmetry
    with the other evaluators; the sum terminates and needs no tolerance.
    The terminating sum is formed in binary64 first. Its terms can exceed the
    result by many orders of magnitude; when ``sum|t_k|/|sum t_k|`` exceeds
    ``CANCELLATION_LIMIT`` the same sum is redone in mpmath with enough digits
    to absorb the cancellation.
    """
    n = int(n)
    if n < 0:
        raise DomainError("degree must be nonnegative")
    if par.a == 0:
        raise ZeroParameterPrefactor("the defining sum has the prefactor a^-n; use asc_eval_rec for a = 0")
    if n == 0:
        return 1.0 + 0j
    p = _point(p)
    q, a, b = par.q, par.a, par.b
    total, abs_sum = _asc_def_terms(n, p.x, par)
    val = a ** (-n) * qpoch_finite(a * b, q, n) * total
    kappa = abs_sum / abs(total) if total != 0 else math.inf
    if kappa <= CANCELLATION_LIMIT:
        return val
    digits = 20 + int(math.log10(min(kappa, 1e300)))
    while True:
        val, kappa_mp = _asc_def_terms_mp(n, p, par, digits)
        if math.isfinite(kappa_mp):
            needed = 20 + int(math.log10(max(kappa_mp, 1.0)))
            if needed <= digits - 3:
                return val
            digits = needed + 10
        elif digits >= 1000:
            # the sum vanishes to every digit carried
            return val
        else:
            # cancelled to exactly zero: the float estimate of kappa was too low
            digits *= 2


def asc_eval_rec(n: int, p, par: ASCParams) -> complex:
    """``S_n`` by the three-term recurrence in ``x``."""
    n = int(n)
    if n < 0:
        raise DomainError("degree must be nonnegative")
    p = _point(p)
    return complex(kernels.asc_table(np.array([p.x], dtype=complex), par.a, par.b, par.q, n)[n, 0])


def asc_table(nmax: int, x, par: ASCParams) -> np.ndarray:
    """``S_0..S_nmax`` at every point of ``x``; shape ``(nmax + 1, len(x))``."""
    return kernels.asc_table(np.atleast_1d(np.asarray(x, dtype=complex)), par.a, par.b, par.q, int(nmax))


def asc_monomial_coeffs(n: int, par: ASCParams) -> np.ndarray:
    """Coefficients of ``S_0..S_n`` in powers of ``x``; row ``k`` holds ``S_k``."""
    q, a, b = par.q, par.a, par.b
    out = np.zeros((n + 1, n + 1), dtype=complex)
    out[0, 0] = 1.0
    if n == 0:
        return out
    out[1, 1] = 2.0
    out[1, 0] = -(a + b)
    for k in range(1, n):
        qk = q ** k
        out[k + 1, 1:] += 2.0 * out[k, :-1]
        out[k + 1] -= (a + b) * qk * out[k]
        out[k + 1] -= (1 - qk) * (1 - a * b * qk / q) * out[k - 1]
    return out


def asc_connection_coeffs(alpha, par: ASCParams, n: int) -> list:
    """``c_{k,n}`` with ``S_n(x; alpha, b) = sum_k c_{k,n} S_k(x; a, b)``.

    ``c_{k,n} = (q^-n;q)_k/(q;q)_k a^{n-k} (-1)^k q^{nk - k(k-1)/2} (alpha/a;q)_{n-k}``.
    """
    q, a = par.q, par.a
    if a == 0:
        raise ZeroParameterPrefactor("connection coefficients need a != 0")
    alpha = complex(alpha)
    out = []
    for k in range(n + 1):
        c = qpoch_finite(q ** (-n), q, k) / qpoch_finite(q, q, k)
        c *= a ** (n - k) * (-1) ** k * q ** (n * k - k * (k - 1) / 2)
        c *= qpoch_finite(alpha / a, q, n - k)
        out.append(c)
    return out


def asc_connection_coeffs_solve(alpha, par: ASCParams, n: int) -> np.ndarray:
    """Connection coefficients by back substitution on monomial coefficients."""
    basis = asc_monomial_coeffs(n, par)
    target = asc_monomial_coeffs(n, par.with_a(alpha))[n]
    # basis rows are lower triangular in the degree; solve basis.T @ c = target
    c = np.zeros(n + 1, dtype=complex)
    resid = target.copy()
    for k in range(n, -1, -1):
        c[k] = resid[k] / basis[k, k]
        resid -= c[k] * basis[k]
    return c


def asc_asymptotic_amplitude(xi, par: ASCParams, ctx=None) -> complex:
    """``A(xi) = (a xi, b xi;q)_inf / (xi^2;q)_inf`` for ``|xi| < 1``."""
    xi = complex(xi)
    if not abs(xi) < 1:
        raise DomainError("the amplitude needs |xi| < 1")
    ctx = as_context(par.q if ctx is None else ctx)
    num = qpoch_infinite(par.a * xi, ctx) * qpoch_infinite(par.b * xi, ctx)
    return complex((num / qpoch_infinite(xi * xi, ctx)).value)


def asc_on_spectrum_oscillation(n: int, theta: float, par: ASCParams, ctx=None) -> float:
    """Leading term ``2 |A(e^{i theta})| cos(n theta - arg A)`` (diagnostic only)."""
    ctx = as_context(par.q if ctx is None else ctx)
    e = cmath.exp(1j * theta)
    num = qpoch_infinite(par.a * e, ctx) * qpoch_infinite(par.b * e, ctx)
    amp = complex((num / qpoch_infinite(e * e, ctx)).value)
    return 2 * abs(amp) * math.cos(n * theta - cmath.phase(amp))


@dataclass(frozen=True)
class CharlierParams:
    """Parameter ``a > 0`` and base ``q`` of the q-Charlier polynomials."""

    a: float
    q: float

    def __post_init__(self):
        QContext(self.q)
        if not float(self.a) > 0:
            raise DomainError(f"q-Charlier parameter must be positive, got {self.a}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "q", float(self.q))


def qcharlier_eval(m: int, x, par: CharlierParams, ctx=None) -> complex:
    """``c_m(x; a; q) = 2phi1(q^-m, x; 0; q, -q^{m+1}/a)``."""
    ctx = as_context(par.q if ctx is None else ctx)
    q, m = par.q, int(m)
    if m < 0:
        raise DomainError("degree must be nonnegative")
    return complex(phi([q ** (-m), complex(x)], [0.0], -q ** (m + 1) / par.a, ctx).value)


def qcharlier_eval_alt(m: int, x, par: CharlierParams) -> complex:
    """``c_m`` from its inverted form
    ``(-a)^-m q^{m^2} x^m (L;q)_m 1phi1(q^-m; L; q, -a q^{1-m}/x)``, ``L = q^{1-m}/x``.

    ``(L;q)_m`` is merged into the terms, giving ``(L q^k;q)_{m-k}``, so lattice
    points where ``L`` is a nonpositive power of ``q`` need no limit.
    """
    q, m, a = par.q, int(m), par.a
    x = complex(x)
    if x == 0:
        raise DomainError("the inverted form needs x != 0")
    lat = q ** (1 - m) / x
    z = -a * q ** (1 - m) / x
    total = 0j
    for k in range(m + 1):
        t = qpoch_finite(q ** (-m), q, k) * qpoch_finite(lat * q ** k, q, m - k) / qpoch_finite(q, q, k)
        total += t * (-1) ** k * q ** (k * (k - 1) / 2) * z ** k
    return (-a) ** (-m) * q ** (m * m) * x ** m * total


def qlaguerre_eval(n: int, alpha: float, x, ctx) -> complex:
    """``L_n^(alpha)(x;q) = (q^{alpha+1};q)_n/(q;q)_n 1phi1(q^-n; q^{alpha+1}; q, -x q^{alpha+n+1})``."""
    ctx = as_context(ctx)
    q, n, alpha = ctx.q, int(n), float(alpha)
    if not alpha > -1:
        raise DomainError(f"q-Laguerre order must exceed -1, got {alpha}")
    if n < 0:
        raise DomainError("degree must be nonnegative")
    pref = qpoch_finite(q ** (alpha + 1), q, n) / qpoch_finite(q, q, n)
    return pref * phi([q ** (-n)], [q ** (alpha + 1)], -complex(x) * q ** (alpha + n + 1), ctx).value


def qlaguerre_relation_residual(m: int, alpha: float, a: float, q, tol=None) -> ResidualReport:
    """q-Charlier at ``q^{-alpha-m}`` against ``(-a q^alpha)^-m (q;q)_m L_m^(alpha)(a q^-m; q)``."""
    ctx = working_context(q)
    q = ctx.q
    tol = 1e-10 if tol is None else tol
    lhs = qcharlier_eval(m, q ** (-alpha - m), CharlierParams(a, q), ctx)
    rhs = (-a * q ** alpha) ** (-m) * qpoch_finite(q, q, m) * qlaguerre_eval(m, alpha, a * q ** (-m), ctx)
    return ResidualReport(
        lhs,
        rhs,
        tol,
        (0.0, 0.0),
        IdentityCase.make("qlag_relation", m=m, alpha=alpha, a=a, q=q),
        ("Laguerre argument a*q^-m",),
    )


__all__ = [
    "ASCParams",
    "SpectralPoint",
    "CharlierParams",
    "CANCELLATION_LIMIT",
    "asc_eval_def",
    "asc_eval_rec",
    "asc_table",
    "asc_monomial_coeffs",
    "asc_connection_coeffs",
    "asc_connection_coeffs_solve",
    "asc_asymptotic_amplitude",
    "asc_on_spectrum_oscillation",
    "qcharlier_eval",
    "qcharlier_eval_alt",
    "qlaguerre_eval",
    "qlaguerre_relation_residual",
]
