"""Pure-Python numeric kernels.

Fallback for the compiled ``_kernels`` extension; every function has the same
signature and return convention. Scalar kernels loop in plain Python, the
``*_vec`` kernels loop over the summation index and vectorise over nodes with
numpy.

Status codes returned by the series kernels:

``STATUS_OK``
    converged (or terminated) normally.
``STATUS_CAP``
    the term cap was reached before the stopping rule fired.
"""
import math

import numpy as np

STATUS_OK = 0
STATUS_CAP = 1


def product_length(amax, q, tol):
    """Smallest K >= 0 with amax * q**K / (1 - q) < tol."""
    if amax == 0.0:
        return 0
    bound = tol * (1.0 - q) / amax
    if bound >= 1.0:
        return 0
    k = int(math.ceil(math.log(bound) / math.log(q)))
    while k > 0 and amax * q ** (k - 1) / (1.0 - q) < tol:
        k -= 1
    while amax * q ** k / (1.0 - q) >= tol:
        k += 1
    return k


def _log_tail(amax, q, k):
    # |log prod_{i>=k} (1 - a q^i)| <= |a| q^k / (1 - q - |a| q^k)
    t = amax * q ** k
    return t / (1.0 - q - t) if t else 0.0


def qpoch_inf(a, q, tol, cap):
    """Truncated (a;q)_inf.

    Returns ``(value, tail_bound, K)``; ``K == -1`` means more than ``cap``
    factors would be needed.
    """
    a = complex(a)
    aa = abs(a)
    k = product_length(aa, q, tol)
    if k > cap:
        return complex("nan"), math.inf, -1
    p = 1.0 + 0.0j
    qi = 1.0
    for _ in range(k):
        p *= 1.0 - a * qi
        qi *= q
    return p, abs(p) * math.expm1(_log_tail(aa, q, k)), k


def qpoch_ratio(a, b, q, tol, cap):
    """Truncated (a;q)_inf / (b;q)_inf as a product of factor ratios."""
    a = complex(a)
    b = complex(b)
    aa, ab = abs(a), abs(b)
    k = product_length(max(aa, ab), q, tol)
    if k > cap:
        return complex("nan"), math.inf, -1
    p = 1.0 + 0.0j
    qi = 1.0
    for _ in range(k):
        p *= (1.0 - a * qi) / (1.0 - b * qi)
        qi *= q
    lt = _log_tail(aa, q, k) + _log_tail(ab, q, k)
    return p, abs(p) * math.expm1(lt), k


def qpoch_inf_vec(a, q, tol, cap):
    """Elementwise truncated (a_j;q)_inf with a common truncation length."""
    a = np.asarray(a, dtype=np.complex128)
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    k = product_length(amax, q, tol)
    if k > cap:
        return np.full(a.shape, np.nan + 0j), np.full(a.shape, np.inf), -1
    p = np.ones(a.shape, dtype=np.complex128)
    qi = 1.0
    for _ in range(k):
        p *= 1.0 - a * qi
        qi *= q
    lt = _log_tail(amax, q, k)
    return p, np.abs(p) * math.expm1(lt), k


def _majorant(absz, absu, absl, q, e, k):
    # sup_{j>=k} |t_{j+1}/t_j|
    qk = q ** k
    den = 1.0 - qk * q
    for bl in absl:
        d = 1.0 - bl * qk
        if d <= 0.0:
            return math.inf
        den *= d
    num = absz
    for au in absu:
        num *= 1.0 + au * qk
    if e > 0:
        num *= qk ** e
    return num / den


def phi_sum(upper, lower, z, q, e, tol, cap, nterm):
    """Sum a basic hypergeometric series term by term.

    ``e`` is the exponent of the ``(-1)^k q^{k(k-1)/2}`` factor. With
    ``nterm >= 0`` exactly ``nterm + 1`` terms are summed. Otherwise the sum
    stops before the first term ``t_K`` for which ``t_{K-2}, t_{K-1}, t_K`` are
    all below ``tol * max(1, |partial sum|)`` and the ratio majorant for
    ``j >= K`` is below one; the tail bound is ``|t_K| / (1 - rho_K)``.

    Returns ``(value, tail_bound, terms_used, status, abs_sum)``.
    """
    upper = [complex(u) for u in upper]
    lower = [complex(b) for b in lower]
    z = complex(z)
    absu = [abs(u) for u in upper]
    absl = [abs(b) for b in lower]
    absz = abs(z)
    # Neumaier-compensated sums of the real and imaginary parts
    sr = si = cr = ci = 0.0
    abs_sum = 0.0
    t = 1.0 + 0.0j
    qk = 1.0
    k = 0
    small = 0
    while True:
        x = t.real
        s = sr + x
        if abs(sr) >= abs(x):
            cr += (sr - s) + x
        else:
            cr += (x - s) + sr
        sr = s
        x = t.imag
        s = si + x
        if abs(si) >= abs(x):
            ci += (si - s) + x
        else:
            ci += (x - s) + si
        si = s
        abs_sum += abs(t)
        if nterm >= 0 and k == nterm:
            return complex(sr + cr, si + ci), 0.0, k + 1, STATUS_OK, abs_sum
        if k + 1 >= cap:
            return complex(sr + cr, si + ci), math.inf, k + 1, STATUS_CAP, abs_sum
        num = 1.0 + 0.0j
        for u in upper:
            num *= 1.0 - u * qk
        den = 1.0 - qk * q
        for b in lower:
            den *= 1.0 - b * qk
        f = z
        if e:
            f *= (-qk) ** e
        t = t * num / den * f
        k += 1
        qk *= q
        if nterm < 0:
            partial = abs(complex(sr + cr, si + ci))
            if abs(t) < tol * max(1.0, partial):
                small += 1
            else:
                small = 0
            if small >= 3:
                rho = _majorant(absz, absu, absl, q, e, k)
                if rho < 1.0:
                    value = complex(sr + cr, si + ci)
                    return value, abs(t) / (1.0 - rho), k, STATUS_OK, abs_sum


def phi_sum_vec(upper, lower, z, q, e, tol, cap, nterm):
    """Vectorised ``phi_sum``: ``upper`` is (r, J), ``lower`` is (s, J).

    The stopping rule is applied to the worst node. Returns
    ``(values, tails, terms_used, status)``.
    """
    upper = np.atleast_2d(np.asarray(upper, dtype=np.complex128))
    lower = np.asarray(lower, dtype=np.complex128)
    if lower.size == 0:
        lower = lower.reshape(0, upper.shape[1])
    lower = np.atleast_2d(lower)
    z = complex(z)
    nodes = upper.shape[1]
    absu = np.abs(upper)
    absl = np.abs(lower)
    absz = abs(z)
    sr = np.zeros(nodes)
    si = np.zeros(nodes)
    cr = np.zeros(nodes)
    ci = np.zeros(nodes)
    t = np.ones(nodes, dtype=np.complex128)
    qk = 1.0
    k = 0
    small = 0
    while True:
        for s_, c_, x in ((sr, cr, t.real), (si, ci, t.imag)):
            s = s_ + x
            big = np.abs(s_) >= np.abs(x)
            c_ += np.where(big, (s_ - s) + x, (x - s) + s_)
            s_[:] = s
        if nterm >= 0 and k == nterm:
            return (sr + cr) + 1j * (si + ci), np.zeros(nodes), k + 1, STATUS_OK
        if k + 1 >= cap:
            return (sr + cr) + 1j * (si + ci), np.full(nodes, np.inf), k + 1, STATUS_CAP
        num = np.prod(1.0 - upper * qk, axis=0)
        den = (1.0 - qk * q) * np.prod(1.0 - lower * qk, axis=0)
        f = z * ((-qk) ** e if e else 1.0)
        t = t * num / den * f
        k += 1
        qk *= q
        if nterm < 0:
            partial = np.abs((sr + cr) + 1j * (si + ci))
            if np.all(np.abs(t) < tol * np.maximum(1.0, partial)):
                small += 1
            else:
                small = 0
            if small >= 3:
                qk_ = q ** k
                dl = 1.0 - absl * qk_
                if np.all(dl > 0.0):
                    rho = absz * np.prod(1.0 + absu * qk_, axis=0)
                    rho /= (1.0 - qk_ * q) * np.prod(dl, axis=0)
                    if e > 0:
                        rho *= qk_ ** e
                    if np.all(rho < 1.0):
                        values = (sr + cr) + 1j * (si + ci)
                        return values, np.abs(t) / (1.0 - rho), k, STATUS_OK


def asc_table(x, a, b, q, nmax):
    """S_0..S_nmax at the points x by the three-term recurrence.

    Returns an array of shape (nmax + 1, len(x)).
    """
    x = np.asarray(x, dtype=np.complex128)
    a = complex(a)
    b = complex(b)
    out = np.empty((nmax + 1, x.size), dtype=np.complex128)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = 2.0 * x - (a + b)
    qk = q
    for k in range(1, nmax):
        out[k + 1] = (2.0 * x - (a + b) * qk) * out[k] - (1.0 - qk) * (1.0 - a * b * qk / q) * out[k - 1]
        qk *= q
    return out
