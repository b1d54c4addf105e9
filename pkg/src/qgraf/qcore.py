"""q-shifted factorials, basic hypergeometric series, q-gamma and Bessel functions.

Every infinite sum or product comes back as a :class:`SeriesValue` carrying a
rigorous bound on the part that was not summed. Truncation rules:

* ``(a;q)_inf`` keeps the first ``K`` factors, ``K`` minimal with
  ``|a| q^K / (1 - q) < tol``. Since ``|log(1 - u)| <= |u| / (1 - |u|)``, the
  omitted factor satisfies ``|log prod_{i>=K}(1 - a q^i)| <= L`` with
  ``L = |a| q^K / (1 - q - |a| q^K)``, so the error is at most
  ``|value| * expm1(L)``.
* Nonterminating series stop once three consecutive terms are below
  ``tol * max(1, |partial sum|)`` and a ratio majorant ``rho`` valid for all
  later terms is below one; the tail is bounded by ``|t_K| / (1 - rho)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from numbers import Integral, Real
from typing import Sequence

import numpy as np

from . import kernels
from .errors import (
    CapExceeded,
    DomainError,
    NonConvergent,
    PoleAtNonpositiveInteger,
    PoleInLowerParameter,
)
from .report import IdentityCase, ResidualReport

# b is treated as q^{-k} when |b - q^{-k}| < POLE_RTOL * q^{-k}
POLE_RTOL = 1e-13
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QContext:
    """Base ``q`` plus accuracy target and truncation caps."""

    q: float
    tol: float = 1e-12
    max_terms: int = 10000
    max_product_factors: int = 20000

    def __post_init__(self):
        q = self.q
        if isinstance(q, bool) or not isinstance(q, Real):
            raise DomainError(f"q must be a real number, got {q!r}")
        if not 0.0 < float(q) < 1.0:
            raise DomainError(f"q must lie strictly between 0 and 1, got {q!r}")
        tol = self.tol
        if isinstance(tol, bool) or not isinstance(tol, Real) or not tol > 0 or not math.isfinite(tol):
            raise DomainError(f"tol must be a positive finite real, got {tol!r}")
        for name in ("max_terms", "max_product_factors"):
            cap = getattr(self, name)
            if isinstance(cap, bool) or not isinstance(cap, Integral) or cap < 1:
                raise DomainError(f"{name} must be an integer >= 1, got {cap!r}")
            object.__setattr__(self, name, int(cap))
        object.__setattr__(self, "q", float(q))
        object.__setattr__(self, "tol", float(tol))

    def replace(self, **changes) -> "QContext":
        return replace(self, **changes)


# internal accuracy used by the identity checkers when no context is supplied;
# residual budgets are absolute, and members can reach 1e4 in size
WORKING_TOL = 1e-15


def working_context(ctx) -> QContext:
    """A supplied :class:`QContext` unchanged, or a bare ``q`` at ``WORKING_TOL``."""
    if isinstance(ctx, QContext):
        return ctx
    return QContext(ctx, tol=WORKING_TOL)


def as_context(ctx, tol=None) -> QContext:
    """Accept a :class:`QContext` or a bare ``q``; optionally override ``tol``."""
    c = ctx if isinstance(ctx, QContext) else QContext(ctx)
    if tol is not None and tol != c.tol:
        c = c.replace(tol=tol)
    return c


@dataclass(frozen=True)
class SeriesValue:
    """A computed value with a bound on the omitted remainder.

    Products and quotients propagate the bounds: for ``A = a + da`` and
    ``B = b + db`` with ``|da| <= s``, ``|db| <= t`` the product error is at
    most ``|a| t + |b| s + s t``.
    """

    value: complex
    tail_bound: float = 0.0
    terms_used: int = 0
    cancelled: tuple = ()
    abs_sum: float = math.nan

    def __complex__(self):
        return complex(self.value)

    def __mul__(self, other):
        if isinstance(other, SeriesValue):
            a, b = complex(self.value), complex(other.value)
            s, t = self.tail_bound, other.tail_bound
            return SeriesValue(
                a * b,
                abs(a) * t + abs(b) * s + s * t,
                self.terms_used + other.terms_used,
                self.cancelled + other.cancelled,
            )
        c = complex(other)
        return SeriesValue(self.value * c, self.tail_bound * abs(c), self.terms_used, self.cancelled)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SeriesValue):
            b, t = complex(other.value), other.tail_bound
            if b == 0:
                raise ZeroDivisionError("division by a vanishing series value")
            # |1/B - 1/b| <= t / (|b| (|b| - t))
            inv_err = t / (abs(b) * (abs(b) - t)) if t < abs(b) else math.inf
            inv = SeriesValue(1.0 / b, inv_err, other.terms_used, other.cancelled)
            return self * inv
        return self * (1.0 / complex(other))

    def __add__(self, other):
        if isinstance(other, SeriesValue):
            return SeriesValue(
                self.value + other.value,
                self.tail_bound + other.tail_bound,
                self.terms_used + other.terms_used,
                self.cancelled + other.cancelled,
            )
        return SeriesValue(self.value + complex(other), self.tail_bound, self.terms_used, self.cancelled)

    __radd__ = __add__

    def __neg__(self):
        return SeriesValue(-self.value, self.tail_bound, self.terms_used, self.cancelled)


@dataclass(frozen=True)
class HypergeometricSpec:
    """Parameters of an ``r phi s`` series."""

    upper: tuple = ()
    lower: tuple = ()
    argument: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(complex(u) for u in self.upper))
        object.__setattr__(self, "lower", tuple(complex(b) for b in self.lower))
        object.__setattr__(self, "argument", complex(self.argument))

    @property
    def r(self) -> int:
        return len(self.upper)

    @property
    def s(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class GrafInstance:
    """Order, arguments, angle and index for the classical Graf formulas."""

    nu: float
    x: float
    y: float
    psi: float
    m: int = 0

    def __post_init__(self):
        for name in ("nu", "x", "y", "psi"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if not is_integer(self.nu) and not abs(self.y) < abs(self.x):
            raise DomainError("non-integer order needs |y| < |x|")

    @property
    def s(self) -> complex:
        return cmath.exp(1j * self.psi)


def is_integer(x, tol=0.0) -> bool:
    x = complex(x)
    if x.imag != 0 or not math.isfinite(x.real):
        return False
    return abs(x.real - round(x.real)) <= tol


def q_power_index(u, q: float):
    """Integer ``k`` with ``u == q**-k`` under the pole tolerance, else ``None``."""
    u = complex(u)
    if u == 0 or abs(u.imag) > POLE_RTOL * abs(u) or u.real <= 0:
        return None
    k = round(-math.log(u.real) / math.log(q))
    ref = q ** (-k)
    if abs(u - ref) < POLE_RTOL * ref:
        return k
    return None


# ---------------------------------------------------------------- products


def qpoch_finite(a, ctx, k: int) -> complex:
    """``(a;q)_k``; negative ``k`` uses ``(a;q)_{-j} = 1/(a q^{-j};q)_j``."""
    q = ctx.q if isinstance(ctx, QContext) else float(ctx)
    a = complex(a)
    k = int(k)
    p = 1.0 + 0.0j
    if k >= 0:
        qi = 1.0
        for _ in range(k):
            p *= 1.0 - a * qi
            qi *= q
        return p
    qi = q ** k
    for _ in range(-k):
        p *= 1.0 - a * qi
        qi *= q
    if p == 0:
        raise PoleInLowerParameter(f"(a;q)_{k} has a pole at a={a}")
    return 1.0 / p


def qpoch_infinite(a, ctx) -> SeriesValue:
    """Truncated ``(a;q)_inf`` with the product tail bound described above."""
    ctx = as_context(ctx)
    val, tail, k = kernels.qpoch_inf(complex(a), ctx.q, ctx.tol, ctx.max_product_factors)
    if k < 0:
        raise CapExceeded(
            f"(a;q)_inf at |a|={abs(complex(a)):.3g}, q={ctx.q} needs more than "
            f"{ctx.max_product_factors} factors"
        )
    return SeriesValue(complex(val), float(tail), int(k))


def qpoch_ratio(a, b, ctx) -> SeriesValue:
    """``(a;q)_inf / (b;q)_inf`` without forming either product.

    When ``b = a q^k`` (or ``a = b q^k``) for an integer ``k >= 0`` the ratio is
    the finite product ``(a;q)_k`` (or its reciprocal) and is exact.
    """
    ctx = as_context(ctx)
    q = ctx.q
    a, b = complex(a), complex(b)
    if a == b:
        return SeriesValue(1.0 + 0j)
    if a != 0 and b != 0:
        k = q_power_index(a / b, q)
        if k is not None:
            if k >= 0:
                return SeriesValue(qpoch_finite(a, q, k))
            den = qpoch_finite(b, q, -k)
            if den == 0:
                raise PoleInLowerParameter(f"(b;q)_inf vanishes at b={b}")
            return SeriesValue(1.0 / den)
    kb = q_power_index(b, q)
    if kb is not None and kb >= 0:
        raise PoleInLowerParameter(f"(b;q)_inf vanishes at b=q^{-kb}")
    val, tail, k = kernels.qpoch_ratio(a, b, q, ctx.tol, ctx.max_product_factors)
    if k < 0:
        raise CapExceeded(f"product ratio needs more than {ctx.max_product_factors} factors")
    return SeriesValue(complex(val), float(tail), int(k))


def qpoch_infinite_many(a, ctx):
    """Elementwise ``(a_j;q)_inf``; returns ``(values, tails)``."""
    ctx = as_context(ctx)
    vals, tails, k = kernels.qpoch_inf_vec(np.asarray(a, dtype=complex), ctx.q, ctx.tol, ctx.max_product_factors)
    if k < 0:
        raise CapExceeded(f"product needs more than {ctx.max_product_factors} factors")
    return vals, tails


# ------------------------------------------------------------------ series


def _termination(upper, q):
    nterm = None
    for u in upper:
        k = q_power_index(u, q)
        if k is not None and k >= 0 and (nterm is None or k < nterm):
            nterm = k
    return nterm


def _check_poles(lower, nterm, q):
    for b in lower:
        k = q_power_index(b, q)
        if k is not None and k >= 0 and (nterm is None or k < nterm):
            raise PoleInLowerParameter(f"lower parameter {b} equals q^-{k}")


def _prepare(upper, lower, q):
    upper = [complex(u) for u in upper]
    lower = [complex(b) for b in lower]
    kept, remaining, cancelled = [], list(lower), []
    for u in upper:
        k = q_power_index(u, q)
        if k is not None and k >= 0:
            kept.append(u)
            continue
        for j, b in enumerate(remaining):
            if abs(u - b) <= POLE_RTOL * max(1.0, abs(u)):
                cancelled.append(u)
                del remaining[j]
                break
        else:
            kept.append(u)
    return kept, remaining, tuple(cancelled)


def phi(upper: Sequence, lower: Sequence, z, ctx) -> SeriesValue:
    """``r phi s (upper; lower; q, z)`` with the ``((-1)^k q^{k(k-1)/2})^{1+s-r}`` factor.

    Matching upper/lower pairs are cancelled first and listed in
    ``SeriesValue.cancelled``. An upper parameter ``q^-n`` terminates the sum
    after ``n + 1`` terms.
    """
    ctx = as_context(ctx)
    q = ctx.q
    e = 1 + len(lower) - len(upper)
    up, lo, cancelled = _prepare(upper, lower, q)
    z = complex(z)
    nterm = _termination(up, q)
    _check_poles(lo, nterm, q)
    if z == 0:
        return SeriesValue(1.0 + 0j, 0.0, 1, cancelled, 1.0)
    if nterm is None:
        if e < 0:
            raise NonConvergent(f"{len(upper)}phi{len(lower)} with nonterminating upper parameters diverges")
        if e == 0 and abs(z) >= 1:
            raise NonConvergent(f"{len(upper)}phi{len(lower)} needs |z| < 1, got |z| = {abs(z):.6g}")
    val, tail, used, status, abs_sum = kernels.phi_sum(
        np.asarray(up, dtype=complex),
        np.asarray(lo, dtype=complex),
        z,
        q,
        e,
        ctx.tol,
        ctx.max_terms,
        -1 if nterm is None else nterm,
    )
    if status == kernels.STATUS_CAP:
        raise CapExceeded(f"series did not converge within {ctx.max_terms} terms")
    return SeriesValue(complex(val), float(tail), int(used), cancelled, float(abs_sum))


def phi_rs(spec: HypergeometricSpec, ctx) -> SeriesValue:
    return phi(spec.upper, spec.lower, spec.argument, ctx)


def phi_many(upper, lower, z, ctx, nterm=None):
    """``phi`` at many nodes at once.

    Entries of ``upper``/``lower`` are scalars or equal-length arrays. Scalar
    entries are screened for termination and poles; array entries must be
    pole-free. Returns ``(values, tails)``.
    """
    ctx = as_context(ctx)
    q = ctx.q
    e = 1 + len(lower) - len(upper)
    sizes = [np.size(v) for v in list(upper) + list(lower) if np.ndim(v) > 0]
    nodes = max(sizes) if sizes else 1
    scal_up = [u for u in upper if np.ndim(u) == 0]
    scal_lo = [b for b in lower if np.ndim(b) == 0]
    if nterm is None:
        nterm = _termination(scal_up, q)
    _check_poles(scal_lo, nterm, q)
    z = complex(z)
    if z == 0:
        return np.ones(nodes, dtype=complex), np.zeros(nodes)
    if nterm is None and (e < 0 or (e == 0 and abs(z) >= 1)):
        raise NonConvergent("series outside its region of convergence")
    U = np.array([np.broadcast_to(np.asarray(u, dtype=complex), (nodes,)) for u in upper]).reshape(len(upper), nodes)
    L = np.array([np.broadcast_to(np.asarray(b, dtype=complex), (nodes,)) for b in lower]).reshape(len(lower), nodes)
    vals, tails, used, status = kernels.phi_sum_vec(
        U, L, z, q, e, ctx.tol, ctx.max_terms, -1 if nterm is None else nterm
    )
    if status == kernels.STATUS_CAP:
        raise CapExceeded(f"series did not converge within {ctx.max_terms} terms")
    return np.asarray(vals), np.asarray(tails)


def _e_factor(k: int, e: int, q: float) -> float:
    # ((-1)^k q^{k(k-1)/2})^e
    sign = -1.0 if (k * e) % 2 else 1.0
    return sign * q ** (k * (k - 1) / 2 * e)


def _shifted_core(upper, n, extra, z, ctx) -> SeriesValue:
    """``c_n * phi(upper q^n; q^{1+n}, extra q^n; q, z q^{n e})`` for ``n >= 1``."""
    q = ctx.q
    e = 1 + (1 + len(extra)) - len(upper)
    nterm = _termination(upper, q)
    if nterm is not None and nterm < n:
        return SeriesValue(0j, 0.0, 0)
    z = complex(z)
    upper = [complex(u) for u in upper]
    extra = [complex(b) for b in extra]
    # c_n = prod_{i<n} z (-q^i)^e (upper q^i) / (extra q^i), one factor at a time
    # so that z^n and q^{e n(n-1)/2} never appear separately
    c = 1.0 + 0j
    for i in range(n):
        qi = q ** i
        f = z * (-qi) ** e
        for u in upper:
            f *= 1.0 - u * qi
        for b in extra:
            d = 1.0 - b * qi
            if d == 0:
                raise PoleInLowerParameter(f"lower parameter {b} is a pole")
            f /= d
        c *= f
    if c == 0:
        return SeriesValue(0j, 0.0, 0)
    qn = q ** n
    inner = phi(
        [complex(u) * qn for u in upper],
        [q ** (n + 1)] + [complex(b) * qn for b in extra],
        z * q ** (n * e),
        ctx,
    )
    return inner * c


def _regularized_direct(upper, n, extra, z, ctx) -> SeriesValue:
    # sum_{k>=n} c_k/(q;q)_k * (q;q)_inf/(q;q)_{k-n}, terms built up from k = 0
    q, tol = ctx.q, ctx.tol
    upper = [complex(u) for u in upper]
    extra = [complex(b) for b in extra]
    e = 1 + (1 + len(extra)) - len(upper)
    z = complex(z)
    nterm = _termination(upper, q)
    _check_poles(extra, nterm, q)
    if (nterm is not None and nterm < n) or z == 0:
        return SeriesValue(0j, 0.0, 0)
    if nterm is None and (e < 0 or (e == 0 and abs(z) >= 1)):
        raise NonConvergent("series outside its region of convergence")

    def ratio(k):
        qk = q ** k
        num = 1.0 + 0j
        for u in upper:
            num *= 1.0 - u * qk
        den = 1.0 - qk * q
        for b in extra:
            den *= 1.0 - b * qk
        return num / den * z * (-qk) ** e

    ck = 1.0 + 0j
    for k in range(n):
        ck *= ratio(k)
    absu = [abs(u) for u in upper]
    absl = [abs(b) for b in extra]
    re, im = [], []
    inv_qj = 1.0
    small = 0
    k = n
    tail = 0.0
    while True:
        t = ck * inv_qj
        re.append(t.real)
        im.append(t.imag)
        if nterm is not None and k == nterm:
            break
        if len(re) >= ctx.max_terms:
            raise CapExceeded(f"series did not converge within {ctx.max_terms} terms")
        j = k - n
        ck *= ratio(k)
        inv_qj /= 1.0 - q ** (j + 1)
        k += 1
        if nterm is None:
            tn = ck * inv_qj
            partial = abs(complex(math.fsum(re), math.fsum(im)))
            small = small + 1 if abs(tn) < tol * max(1.0, partial) else 0
            if small >= 3:
                qk = q ** k
                rho = abs(z) / ((1.0 - qk * q) * (1.0 - q ** (k - n + 1)))
                for au in absu:
                    rho *= 1.0 + au * qk
                for bl in absl:
                    rho = rho / (1.0 - bl * qk) if bl * qk < 1.0 else math.inf
                if e > 0:
                    rho *= qk ** e
                if rho < 1.0:
                    tail = abs(tn) / (1.0 - rho)
                    break
    total = SeriesValue(complex(math.fsum(re), math.fsum(im)), tail, len(re))
    return total * qpoch_infinite(q, ctx)


def phi_regularized(upper: Sequence, n: int, extra_lower: Sequence, z, ctx, form: str = "shifted") -> SeriesValue:
    """``(q^{1-n};q)_inf * phi(upper; q^{1-n}, extra_lower; q, z)`` for every integer ``n``.

    For ``n <= 0`` this is the ordinary series times the prefactor. For
    ``n >= 1`` the first ``n`` terms carry the factor ``1/(q^{1-n};q)_k`` with a
    zero in the product and are dropped; the survivors are summed either
    re-indexed (``form="shifted"``),
    ``(q^{n+1};q)_inf c_n phi(upper q^n; q^{1+n}, extra q^n; q, z q^{n e})``,
    or directly from ``k = n`` (``form="direct"``).
    """
    ctx = as_context(ctx)
    q = ctx.q
    n = int(n)
    extra = list(extra_lower)
    if n <= 0:
        return qpoch_infinite(q ** (1 - n), ctx) * phi(upper, [q ** (1 - n)] + extra, z, ctx)
    if form == "direct":
        return _regularized_direct(upper, n, extra, z, ctx)
    if form != "shifted":
        raise ValueError(f"unknown form {form!r}")
    return _shifted_core(upper, n, extra, z, ctx) * qpoch_infinite(q ** (n + 1), ctx)


def phi_prefactored(upper: Sequence, c, extra_lower: Sequence, z, ctx) -> SeriesValue:
    """``(q^c;q)_inf / (q;q)_inf * phi(upper; q^c, extra_lower; q, z)`` for real ``c``.

    Integer ``c <= 0`` goes through the regularized series; the prefactor is
    exact for integer ``c`` and a factor-by-factor ratio otherwise.
    """
    ctx = as_context(ctx)
    q = ctx.q
    extra = list(extra_lower)
    c = float(c)
    if is_integer(c, 1e-12):
        ci = int(round(c))
        if ci <= 0:
            n = 1 - ci
            return _shifted_core(upper, n, extra, z, ctx) * (1.0 / qpoch_finite(q, q, n))
        pref = SeriesValue(1.0 / qpoch_finite(q, q, ci - 1))
        return pref * phi(upper, [q ** ci] + extra, z, ctx)
    return qpoch_ratio(q ** c, q, ctx) * phi(upper, [q ** c] + extra, z, ctx)


def one_phi_one_shift_residual(a, z, n: int, ctx, tol=None) -> ResidualReport:
    """Index shift of the prefactored ``1 phi 1`` valid for every integer ``n``.

    Left: ``(q^{1-n};q)_inf/(q;q)_inf 1phi1(a; q^{1-n}; q, z)`` summed directly
    from ``k = n``. Right: ``z^n (-1)^n q^{n(n-1)/2} (a, q^{1+n};q)_inf /
    (a q^n, q;q)_inf 1phi1(a q^n; q^{1+n}; q, z q^n)``. The ratio
    ``(a;q)_inf/(a q^n;q)_inf`` is folded in as ``(a;q)_n`` for ``n >= 0``; for
    ``n < 0`` it cancels the ``(a q^n;q)_{-n}`` factor of the regularized series,
    so ``a q^n`` hitting a nonpositive power of ``q`` stays finite.
    """
    ctx = working_context(ctx)
    q = ctx.q
    a, z, n = complex(a), complex(z), int(n)
    tol = 1e-10 if tol is None else tol
    qq = qpoch_infinite(q, ctx)
    lhs = phi_regularized([a], n, [], z, ctx, form="direct") / qq
    if n >= 0:
        rhs = phi_regularized([a * q ** n], -n, [], z * q ** n, ctx, form="shifted")
        rhs = rhs * qpoch_finite(a, q, n) / qq
    else:
        m, zs = -n, z * q ** n
        c = 1.0 + 0j
        for i in range(m):
            c *= -zs * q ** i
        rhs = phi([a], [q ** (m + 1)], zs * q ** m, ctx) * qpoch_infinite(q ** (m + 1), ctx)
        rhs = rhs * c / qq
    rhs = rhs * (z ** n * (-1) ** n * q ** (n * (n - 1) / 2))
    notes = []
    if n >= 1:
        notes.append("left member regularized (first n terms dropped)")
    elif n <= -1:
        notes.append("right member regularized (first -n terms dropped)")
    return ResidualReport(
        lhs.value,
        rhs.value,
        tol,
        (lhs.tail_bound, rhs.tail_bound),
        IdentityCase.make("one_phi_one_shift", a=a, z=z, n=n, q=q),
        tuple(notes),
    )


# ------------------------------------------------------------ gamma family

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x: float) -> float:
    """Gamma function (Lanczos, g=7, nine terms, reflection below 1/2)."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise PoleAtNonpositiveInteger(f"Gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    # split the power so moderately large x does not overflow early
    p = t ** ((x + 0.5) / 2)
    return math.sqrt(2 * math.pi) * p * (p * math.exp(-t)) * acc


def rgamma(x: float) -> float:
    """1/Gamma(x), zero at the poles."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        return 0.0
    if x > 171.0:
        return 0.0
    return 1.0 / gamma(x)


def qgamma(x: float, ctx) -> float:
    """``Gamma_q(x) = (q;q)_inf / (q^x;q)_inf * (1 - q)^{1 - x}``.

    Near ``q = 1`` the product needs about ``log(tol (1 - q)) / log q`` factors;
    raise ``max_product_factors`` accordingly.
    """
    ctx = as_context(ctx)
    x = float(x)
    if x <= 0 and is_integer(x, 1e-13):
        raise PoleAtNonpositiveInteger(f"Gamma_q has a pole at {x}")
    q = ctx.q
    ratio = qpoch_ratio(q, q ** x, ctx)
    return (ratio.value * (1.0 - q) ** (1.0 - x)).real


def _j_core(nu: float, w: float, tol: float) -> float:
    """``sum_k (-w)^k / (k! Gamma(nu+k+1))`` for ``nu + 1`` not a nonpositive integer."""
    t = rgamma(nu + 1.0)
    if w == 0:
        return t
    terms = []
    biggest = abs(t)
    k = 0
    while True:
        terms.append(t)
        rho = w / ((k + 1) * abs(nu + k + 1))
        t = t * (-w) / ((k + 1) * (nu + k + 1))
        k += 1
        biggest = max(biggest, abs(t))
        if rho < 0.5 and abs(t) < EPS * 1e-3 * biggest:
            terms.append(t)
            break
    if biggest * EPS * len(terms) <= tol * 0.1:
        return math.fsum(terms)
    import mpmath

    # the alternating sum loses log10(biggest/|sum|) digits; redo it with room to spare
    dps = 20 + max(0, int(math.log10(biggest)) + 1)
    with mpmath.workdps(dps):
        val = mpmath.hyp0f1(mpmath.mpf(nu) + 1, -mpmath.mpf(w))
    return float(val) * rgamma(nu + 1.0)


def bessel_j(nu: float, z: float, ctx=None) -> float:
    """``J_nu(z)`` from the power series with an in-house Gamma."""
    tol = ctx.tol if isinstance(ctx, QContext) else 1e-12
    nu, z = float(nu), float(z)
    if is_integer(nu):
        n = int(round(nu))
        sign = 1.0
        if n < 0:
            n = -n
            sign = (-1.0) ** n
        if z < 0:
            z = -z
            sign *= (-1.0) ** n
        if z == 0:
            return sign * (1.0 if n == 0 else 0.0)
        lead = (z / 2) ** n
        return sign * lead * _j_core(float(n), z * z / 4, tol / max(lead, 1e-300))
    if z < 0 or (z == 0 and nu < 0):
        raise DomainError(f"J_nu(z) for non-integer nu={nu} needs z > 0")
    if z == 0:
        return 0.0
    lead = (z / 2) ** nu
    return lead * _j_core(nu, z * z / 4, tol / max(lead, 1e-300))


def bessel_j_scaled(nu: float, r: float, ctx=None) -> float:
    """``J_nu(r) / r^nu`` as an entire function of ``r``."""
    tol = ctx.tol if isinstance(ctx, QContext) else 1e-12
    nu, r = float(nu), float(r)
    if is_integer(nu) and nu < 0:
        n = -int(round(nu))
        return (-1.0) ** n * r ** (2 * n) * bessel_j_scaled(float(n), r, ctx)
    return 2.0 ** (-nu) * _j_core(nu, r * r / 4, tol * 2.0 ** nu)


__all__ = [
    "QContext",
    "SeriesValue",
    "HypergeometricSpec",
    "GrafInstance",
    "as_context",
    "working_context",
    "WORKING_TOL",
    "is_integer",
    "q_power_index",
    "qpoch_finite",
    "qpoch_infinite",
    "qpoch_ratio",
    "qpoch_infinite_many",
    "phi",
    "phi_rs",
    "phi_many",
    "phi_regularized",
    "phi_prefactored",
    "one_phi_one_shift_residual",
    "gamma",
    "rgamma",
    "qgamma",
    "bessel_j",
    "bessel_j_scaled",
]
