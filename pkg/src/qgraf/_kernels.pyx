# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels; see ``_kernels_py`` for the contracts."""
import numpy as np

from libc.math cimport ceil, expm1, fabs, hypot, log, INFINITY, NAN

STATUS_OK = 0
STATUS_CAP = 1


cdef inline double cabs_(double complex z) noexcept nogil:
    return hypot(z.real, z.imag)


cpdef long product_length(double amax, double q, double tol):
    cdef double bound
    cdef long k
    if amax == 0.0:
        return 0
    bound = tol * (1.0 - q) / amax
    if bound >= 1.0:
        return 0
    k = <long>ceil(log(bound) / log(q))
    while k > 0 and amax * q ** (k - 1) / (1.0 - q) < tol:
        k -= 1
    while amax * q ** k / (1.0 - q) >= tol:
        k += 1
    return k


cdef inline double _log_tail(double amax, double q, long k) noexcept nogil:
    cdef double t = amax * q ** k
    if t == 0.0:
        return 0.0
    return t / (1.0 - q - t)


def qpoch_inf(double complex a, double q, double tol, long cap):
    cdef double aa = cabs_(a)
    cdef long k = product_length(aa, q, tol)
    cdef long i
    cdef double complex p = 1.0
    cdef double qi = 1.0
    if k > cap:
        return complex(NAN, NAN), INFINITY, -1
    for i in range(k):
        p = p * (1.0 - a * qi)
        qi *= q
    return p, cabs_(p) * expm1(_log_tail(aa, q, k)), k


def qpoch_ratio(double complex a, double complex b, double q, double tol, long cap):
    cdef double aa = cabs_(a)
    cdef double ab = cabs_(b)
    cdef long k = product_length(aa if aa > ab else ab, q, tol)
    cdef long i
    cdef double complex p = 1.0
    cdef double qi = 1.0
    if k > cap:
        return complex(NAN, NAN), INFINITY, -1
    for i in range(k):
        p = p * ((1.0 - a * qi) / (1.0 - b * qi))
        qi *= q
    return p, cabs_(p) * expm1(_log_tail(aa, q, k) + _log_tail(ab, q, k)), k


def qpoch_inf_vec(a, double q, double tol, long cap):
    cdef double complex[::1] av = np.ascontiguousarray(a, dtype=np.complex128).ravel()
    cdef Py_ssize_t n = av.shape[0]
    cdef Py_ssize_t j
    cdef long i, k
    cdef double amax = 0.0, qi, lt
    for j in range(n):
        if cabs_(av[j]) > amax:
            amax = cabs_(av[j])
    k = product_length(amax, q, tol)
    shape = np.shape(a)
    if k > cap:
        return np.full(shape, np.nan + 0j), np.full(shape, np.inf), -1
    out = np.empty(n, dtype=np.complex128)
    tails = np.empty(n, dtype=np.float64)
    cdef double complex[::1] ov = out
    cdef double[::1] tv = tails
    cdef double complex p
    lt = expm1(_log_tail(amax, q, k))
    for j in range(n):
        p = 1.0
        qi = 1.0
        for i in range(k):
            p = p * (1.0 - av[j] * qi)
            qi *= q
        ov[j] = p
        tv[j] = cabs_(p) * lt
    return out.reshape(shape), tails.reshape(shape), k


cdef double _majorant(double absz, double[::1] absu, double[::1] absl,
                      double q, int e, long k):
    cdef double qk = q ** k
    cdef double den = 1.0 - qk * q
    cdef double num = absz
    cdef double d
    cdef Py_ssize_t i
    for i in range(absl.shape[0]):
        d = 1.0 - absl[i] * qk
        if d <= 0.0:
            return INFINITY
        den *= d
    for i in range(absu.shape[0]):
        num *= 1.0 + absu[i] * qk
    if e > 0:
        num *= qk ** e
    return num / den


cdef inline void _nsum(double *s, double *c, double x) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


def phi_sum(upper, lower, double complex z, double q, int e, double tol,
            long cap, long nterm):
    cdef double complex[::1] up = np.ascontiguousarray(upper, dtype=np.complex128).ravel()
    cdef double complex[::1] lo = np.ascontiguousarray(lower, dtype=np.complex128).ravel()
    cdef Py_ssize_t r = up.shape[0]
    cdef Py_ssize_t s = lo.shape[0]
    cdef double[::1] absu = np.abs(np.asarray(up))
    cdef double[::1] absl = np.abs(np.asarray(lo))
    cdef double absz = cabs_(z)
    cdef double sr = 0.0, si = 0.0, cr = 0.0, ci = 0.0, abs_sum = 0.0
    cdef double complex t = 1.0, num, den, f
    cdef double qk = 1.0, partial, rho
    cdef long k = 0
    cdef int small = 0
    cdef Py_ssize_t i
    while True:
        _nsum(&sr, &cr, t.real)
        _nsum(&si, &ci, t.imag)
        abs_sum += cabs_(t)
        if nterm >= 0 and k == nterm:
            return complex(sr + cr, si + ci), 0.0, k + 1, STATUS_OK, abs_sum
        if k + 1 >= cap:
            return complex(sr + cr, si + ci), INFINITY, k + 1, STATUS_CAP, abs_sum
        num = 1.0
        for i in range(r):
            num = num * (1.0 - up[i] * qk)
        den = 1.0 - qk * q
        for i in range(s):
            den = den * (1.0 - lo[i] * qk)
        f = z
        if e:
            f = f * (-qk) ** e
        t = t * num / den * f
        k += 1
        qk *= q
        if nterm < 0:
            partial = hypot(sr + cr, si + ci)
            if cabs_(t) < tol * (partial if partial > 1.0 else 1.0):
                small += 1
            else:
                small = 0
            if small >= 3:
                rho = _majorant(absz, absu, absl, q, e, k)
                if rho < 1.0:
                    return (complex(sr + cr, si + ci), cabs_(t) / (1.0 - rho),
                            k, STATUS_OK, abs_sum)


def phi_sum_vec(upper, lower, double complex z, double q, int e, double tol,
                long cap, long nterm):
    up_arr = np.atleast_2d(np.asarray(upper, dtype=np.complex128))
    nodes = up_arr.shape[1]
    lo_arr = np.asarray(lower, dtype=np.complex128)
    if lo_arr.size == 0:
        lo_arr = lo_arr.reshape(0, nodes)
    lo_arr = np.atleast_2d(lo_arr)
    cdef double complex[:, ::1] up = np.ascontiguousarray(up_arr)
    cdef double complex[:, ::1] lo = np.ascontiguousarray(lo_arr)
    cdef Py_ssize_t r = up.shape[0], s = lo.shape[0], J = nodes
    cdef double absz = cabs_(z)
    sr_a = np.zeros(J)
    si_a = np.zeros(J)
    cr_a = np.zeros(J)
    ci_a = np.zeros(J)
    t_a = np.ones(J, dtype=np.complex128)
    tails_a = np.zeros(J)
    cdef double[::1] sr = sr_a, si = si_a, cr = cr_a, ci = ci_a, tails = tails_a
    cdef double complex[::1] t = t_a
    cdef double qk = 1.0, partial, rho, qk_, d
    cdef double complex num, den, f
    cdef long k = 0
    cdef int small = 0
    cdef bint all_small, ok
    cdef Py_ssize_t i, j
    while True:
        for j in range(J):
            _nsum(&sr[j], &cr[j], t[j].real)
            _nsum(&si[j], &ci[j], t[j].imag)
        if nterm >= 0 and k == nterm:
            return (sr_a + cr_a) + 1j * (si_a + ci_a), tails_a, k + 1, STATUS_OK
        if k + 1 >= cap:
            return ((sr_a + cr_a) + 1j * (si_a + ci_a), np.full(J, np.inf),
                    k + 1, STATUS_CAP)
        f = z
        if e:
            f = f * (-qk) ** e
        all_small = True
        for j in range(J):
            num = 1.0
            for i in range(r):
                num = num * (1.0 - up[i, j] * qk)
            den = 1.0 - qk * q
            for i in range(s):
                den = den * (1.0 - lo[i, j] * qk)
            t[j] = t[j] * num / den * f
            partial = hypot(sr[j] + cr[j], si[j] + ci[j])
            if not (cabs_(t[j]) < tol * (partial if partial > 1.0 else 1.0)):
                all_small = False
        k += 1
        qk *= q
        if nterm < 0:
            if all_small:
                small += 1
            else:
                small = 0
            if small >= 3:
                qk_ = q ** k
                ok = True
                for j in range(J):
                    rho = absz / (1.0 - qk_ * q)
                    for i in range(r):
                        rho *= 1.0 + cabs_(up[i, j]) * qk_
                    for i in range(s):
                        d = 1.0 - cabs_(lo[i, j]) * qk_
                        if d <= 0.0:
                            rho = INFINITY
                            break
                        rho /= d
                    if e > 0:
                        rho *= qk_ ** e
                    if not rho < 1.0:
                        ok = False
                        break
                    tails[j] = cabs_(t[j]) / (1.0 - rho)
                if ok:
                    return (sr_a + cr_a) + 1j * (si_a + ci_a), tails_a, k, STATUS_OK


def asc_table(x, double complex a, double complex b, double q, long nmax):
    cdef double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128).ravel()
    cdef Py_ssize_t J = xv.shape[0], j
    out_a = np.empty((nmax + 1, J), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_a
    cdef long k
    cdef double qk
    cdef double complex ab = a * b, apb = a + b, s, c
    cdef double complex u, o1, o0
    cdef double ur, ui
    for j in range(J):
        out[0, j] = 1.0
    if nmax == 0:
        return out_a
    for j in range(J):
        out[1, j] = 2.0 * xv[j] - apb
    qk = q
    for k in range(1, nmax):
        # row by row over contiguous memory; products spelled out in real
        # arithmetic, C complex multiplication goes through __muldc3
        s = apb * qk
        c = (1.0 - qk) * (1.0 - ab * qk / q)
        for j in range(J):
            u = 2.0 * xv[j] - s
            o1 = out[k, j]
            o0 = out[k - 1, j]
            ur = u.real * o1.real - u.imag * o1.imag - (c.real * o0.real - c.imag * o0.imag)
            ui = u.real * o1.imag + u.imag * o1.real - (c.real * o0.imag + c.imag * o0.real)
            out[k + 1, j] = ur + 1j * ui
        qk *= q
    return out_a
