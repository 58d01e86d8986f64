# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled series-evaluation kernels.

Mirrors the API and numerical strategy of ``fracwave._kernels_py`` (see that
module for the algorithm notes); this version exists because the composition
enumeration and per-grid-point accumulation dominate solver runtime.
"""

from libc.math cimport cos, exp, fabs, fmod, lgamma, log, pow, sin, tgamma
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

from fracwave.errors import NonConvergenceError

cnp.import_array()

BACKEND = "compiled"

cdef double ASYMPTOTIC_SWITCH_EXACT = 36.0
cdef double ASYMPTOTIC_SWITCH_GENERAL = 17.5
cdef double ABS_SUM_LIMIT = 1e12
cdef double SPLITTER = 134217729.0
cdef double M_PI = 3.14159265358979323846


cdef struct dd:
    double hi
    double lo


cdef inline dd two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double bb
    r.hi = a + b
    bb = r.hi - a
    r.lo = (a - (r.hi - bb)) + (b - bb)
    return r


cdef inline dd two_prod(double a, double b) noexcept nogil:
    cdef dd r
    cdef double ca, ah, al, cb, bh, bl
    r.hi = a * b
    ca = SPLITTER * a
    ah = ca - (ca - a)
    al = a - ah
    cb = SPLITTER * b
    bh = cb - (cb - b)
    bl = b - bh
    r.lo = ((ah * bh - r.hi) + ah * bl + al * bh) + al * bl
    return r


cdef inline dd dd_add(dd a, dd b) noexcept nogil:
    cdef dd s = two_sum(a.hi, b.hi)
    s.lo += a.lo + b.lo
    return two_sum(s.hi, s.lo)


cdef inline dd dd_add_d(dd a, double b) noexcept nogil:
    cdef dd s = two_sum(a.hi, b)
    s.lo += a.lo
    return two_sum(s.hi, s.lo)


cdef inline dd dd_mul_d(dd a, double x) noexcept nogil:
    cdef dd p = two_prod(a.hi, x)
    p.lo += a.lo * x
    return two_sum(p.hi, p.lo)


cdef inline dd dd_div_d(dd a, double x) noexcept nogil:
    cdef double q1 = (a.hi + a.lo) / x
    cdef dd p = two_prod(q1, x)
    cdef double q2 = ((a.hi - p.hi) + (a.lo - p.lo)) / x
    return two_sum(q1, q2)


cdef inline long as_positive_int(double x) noexcept nogil:
    cdef long i = <long> (x + 0.5) if x > 0 else -1
    if i >= 1 and fabs(x - i) <= 1e-12 * (1.0 if x < 1.0 else x):
        return i
    return -1


cdef inline double sinpi(double y) noexcept nogil:
    return sin(M_PI * fmod(y, 2.0))


# ---------------------------------------------------------------------------
# one-variable function

cdef double _ml_one_asymptotic(double alpha, double beta, double z,
                               double abs_tol) noexcept nogil:
    cdef double x = -z
    cdef double lnx = log(x)
    cdef double lnpi = log(M_PI)
    cdef double total = 0.0
    cdef double prev_env = 1e308
    cdef double y, env, val, ln_env, r, co, expo, amp, phase
    cdef long yr
    cdef int k
    for k in range(1, 81):
        y = beta - alpha * k
        if y > 0.5:
            env = exp(-k * lnx - lgamma(y))
            val = env
        else:
            ln_env = -k * lnx + lgamma(1.0 - y) - lnpi
            if ln_env > 690.0:
                break
            env = exp(ln_env)
            yr = <long> (y + (0.5 if y >= 0 else -0.5))
            if yr <= 0 and fabs(y - yr) < 1e-9:
                val = 0.0
            else:
                val = env * sinpi(y)
        if env > prev_env:
            break
        prev_env = env
        if k % 2 == 1:
            total += val
        else:
            total -= val
        if env <= 1e-16 and env <= abs_tol:
            break
    if 1.0 < alpha <= 2.0:
        r = pow(x, 1.0 / alpha)
        co = cos(M_PI / alpha)
        expo = r * co
        if expo > -745.0:
            amp = (2.0 / alpha) * pow(r, 1.0 - beta) * exp(expo)
            phase = r * sin(M_PI / alpha) + M_PI * (1.0 - beta) / alpha
            total += amp * cos(phase)
    return total


cdef int _ml_one_series_exact(long ia, long ib, double z, double abs_tol,
                              long max_degree, double *out) noexcept nogil:
    cdef double g0 = 1.0
    cdef long i, k
    cdef double prod, base, m1, r, az, prod_next
    cdef dd t, s
    for i in range(2, ib):
        g0 *= i
    t = dd_div_d(two_sum(1.0, 0.0), g0)
    s = t
    az = fabs(z)
    for k in range(max_degree):
        t = dd_mul_d(t, z)
        prod = 1.0
        base = ib + ia * k
        for i in range(ia):
            prod *= base + i
        t = dd_div_d(t, prod)
        s = dd_add(s, t)
        prod_next = 1.0
        base = ib + ia * (k + 1)
        for i in range(ia):
            prod_next *= base + i
        m1 = fabs(t.hi) * az / prod_next
        r = az / prod_next
        if r < 1.0 and m1 / (1.0 - r) <= abs_tol:
            out[0] = s.hi + s.lo
            return 0
    return 1


cdef int _ml_one_series_general(double alpha, double beta, double z,
                                double abs_tol, long max_degree,
                                double *out) noexcept nogil:
    cdef double az = fabs(z)
    cdef double lnz = log(az)
    cdef bint neg = z < 0.0
    cdef dd s = two_sum(exp(-lgamma(beta)), 0.0)
    cdef double abs_sum = s.hi
    cdef double lg_next = lgamma(beta + alpha)
    cdef double lg_k, mag, term, m1, r, value
    cdef long k
    for k in range(1, max_degree + 1):
        lg_k = lg_next
        mag = exp(k * lnz - lg_k)
        term = -mag if (neg and k % 2 == 1) else mag
        s = dd_add_d(s, term)
        abs_sum += mag
        lg_next = lgamma(beta + alpha * (k + 1))
        m1 = exp((k + 1) * lnz - lg_next)
        r = az * exp(lg_next - lgamma(beta + alpha * (k + 2)))
        if r < 1.0 and m1 / (1.0 - r) <= abs_tol:
            value = s.hi + s.lo
            if neg and abs_sum > ABS_SUM_LIMIT * (1.0 if fabs(value) < 1.0 else fabs(value)):
                return 2
            out[0] = value
            return 0
    return 1


cdef int _ml_one_c(double alpha, double beta, double z, double abs_tol,
                   long max_degree, double *out) noexcept nogil:
    cdef long ia, ib
    cdef double switch
    if z == 0.0:
        out[0] = 1.0 / tgamma(beta)
        return 0
    if z > 0.0 and pow(z, 1.0 / alpha) > 690.0:
        return 3
    ia = as_positive_int(alpha)
    ib = as_positive_int(beta)
    if z < 0.0:
        switch = ASYMPTOTIC_SWITCH_EXACT if (ia > 0 and ib > 0) \
            else ASYMPTOTIC_SWITCH_GENERAL
        if pow(-z, 1.0 / alpha) >= switch:
            out[0] = _ml_one_asymptotic(alpha, beta, z, abs_tol)
            return 0
    if ia > 0 and ib > 0:
        return _ml_one_series_exact(ia, ib, z, abs_tol, max_degree, out)
    return _ml_one_series_general(alpha, beta, z, abs_tol, max_degree, out)


cdef void _raise_status(int status, long max_degree):
    if status == 1:
        raise NonConvergenceError(
            f"series not converged within degree {max_degree}")
    if status == 2:
        raise NonConvergenceError(
            "series cancellation exceeds double-precision headroom")
    if status == 3:
        raise NonConvergenceError("series value overflows double range")
    if status == 4:
        raise NonConvergenceError("multivariate series magnitude overflows")


def ml_one(double alpha, double beta, double z, double abs_tol,
           long max_degree):
    cdef double out = 0.0
    cdef int status = _ml_one_c(alpha, beta, z, abs_tol, max_degree, &out)
    if status:
        _raise_status(status, max_degree)
    return out


def ml_one_grid(double alpha, double beta, object z, double abs_tol,
                long max_degree):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zz = \
        np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(zz)
    cdef Py_ssize_t i, n = zz.shape[0]
    cdef int status = 0
    with nogil:
        for i in range(n):
            status = _ml_one_c(alpha, beta, zz[i], abs_tol, max_degree,
                               &out[i])
            if status:
                break
    if status:
        _raise_status(status, max_degree)
    return out


# ---------------------------------------------------------------------------
# multivariate function

cdef inline bint next_composition(long *l, int p) noexcept nogil:
    """Advance through compositions in colex order; False when exhausted."""
    cdef int j = 0
    cdef long rest
    while j < p - 1 and l[j] == 0:
        j += 1
    if j == p - 1:
        return False
    l[j + 1] += 1
    rest = l[j] - 1
    l[j] = 0
    l[0] = rest
    return True


cdef long _multi_ratio_start(double beta, double amin) noexcept nogil:
    """Degree from which the ratio-based tail rule may fire: all gamma
    arguments are then on the increasing branch."""
    cdef double v = (2.0 - beta) / amin
    cdef long k0 = <long> v
    if k0 < v:
        k0 += 1
    if k0 < 2:
        k0 = 2
    return k0


cdef int _ml_multi_core(double[::1] al, double beta, double[::1] zv,
                        double abs_tol, long max_degree,
                        double *out, long *k_used) noexcept nogil:
    """Shared multivariate series loop; 0 on success."""
    cdef int p = al.shape[0]
    cdef double amin = al[0]
    cdef int i
    for i in range(1, p):
        if al[i] < amin:
            amin = al[i]
    cdef double *lnz = <double *> malloc(p * sizeof(double))
    cdef double *sgn = <double *> malloc(p * sizeof(double))
    cdef long *l = <long *> malloc(p * sizeof(long))
    cdef double *lg_fact = <double *> malloc((max_degree + 2) * sizeof(double))
    if lnz == NULL or sgn == NULL or l == NULL or lg_fact == NULL:
        free(lnz); free(sgn); free(l); free(lg_fact)
        return 5
    for i in range(p):
        lnz[i] = log(fabs(zv[i]))
        sgn[i] = 1.0 if zv[i] > 0 else -1.0
    cdef long n_
    for n_ in range(max_degree + 2):
        lg_fact[n_] = lgamma(n_ + 1.0)

    cdef dd acc = two_sum(0.0, 0.0)
    cdef double abs_sum = 0.0
    cdef long k0 = _multi_ratio_start(beta, amin)
    cdef long k, li
    cdef double ln_t, dot, sign, mag, value, a_k, r
    cdef double a_prev1 = 1e308, a_prev2 = 1e308
    cdef int status = 1
    for k in range(max_degree + 1):
        for i in range(p):
            l[i] = 0
        l[0] = k
        a_k = 0.0
        while True:
            ln_t = lg_fact[k]
            dot = 0.0
            sign = 1.0
            for i in range(p):
                li = l[i]
                if li:
                    ln_t += li * lnz[i] - lg_fact[li]
                    dot += al[i] * li
                    if sgn[i] < 0 and li % 2 == 1:
                        sign = -sign
            mag = exp(ln_t - lgamma(beta + dot))
            acc = dd_add_d(acc, sign * mag)
            a_k += mag
            if not next_composition(l, p):
                break
        abs_sum += a_k
        if abs_sum > 1e290:
            status = 4
            break
        if k >= k0 and a_k > 0.0 and a_prev1 < 1e308:
            r = a_k / a_prev1
            if a_prev1 / a_prev2 > r:
                r = a_prev1 / a_prev2
            if r < 0.95 and a_k * r / (1.0 - r) <= abs_tol:
                value = acc.hi + acc.lo
                if abs_sum > ABS_SUM_LIMIT * (1.0 if fabs(value) < 1.0 else fabs(value)):
                    status = 2
                else:
                    status = 0
                    out[0] = value
                    k_used[0] = k
                break
        a_prev2 = a_prev1
        a_prev1 = a_k
    free(lnz); free(sgn); free(l); free(lg_fact)
    return status


def ml_multi(object alphas_in, double beta, object z_in, double abs_tol,
             long max_degree):
    alphas_list = [float(a) for a in alphas_in]
    z_list = [float(v) for v in z_in]
    keep = [i for i, v in enumerate(z_list) if v != 0.0]
    if not keep:
        return 1.0 / tgamma(beta)
    alphas_list = [alphas_list[i] for i in keep]
    z_list = [z_list[i] for i in keep]
    if len(z_list) == 1:
        return ml_one(alphas_list[0], beta, z_list[0], abs_tol, max_degree)

    cdef double[::1] al = np.asarray(alphas_list, dtype=np.float64)
    cdef double[::1] zv = np.asarray(z_list, dtype=np.float64)
    cdef double out = 0.0
    cdef long k_used = 0
    cdef int status
    with nogil:
        status = _ml_multi_core(al, beta, zv, abs_tol, max_degree,
                                &out, &k_used)
    if status == 5:
        raise MemoryError()
    if status:
        _raise_status(status, max_degree)
    return out


def ml_multi_grid(object alphas_in, double beta, object coefs_in, object t_in,
                  double abs_tol, long max_degree):
    """Evaluate E_{(alphas),beta}(coefs[0]*t^alphas[0], ...) on an array t >= 0."""
    alphas_list = [float(a) for a in alphas_in]
    coefs_list = [float(c) for c in coefs_in]
    keep = [i for i, c in enumerate(coefs_list) if c != 0.0]
    alphas_list = [alphas_list[i] for i in keep]
    coefs_list = [coefs_list[i] for i in keep]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t = \
        np.ascontiguousarray(t_in, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0]
    cdef int p = len(coefs_list)
    cdef double g0 = 1.0 / tgamma(beta)
    if p == 0:
        return np.full_like(t, g0)
    if p == 1:
        return ml_one_grid(alphas_list[0], beta,
                           coefs_list[0] * t ** alphas_list[0],
                           abs_tol, max_degree)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] al = \
        np.asarray(alphas_list, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cf = \
        np.asarray(coefs_list, dtype=np.float64)
    cdef double tmax = float(t.max())
    if tmax == 0.0:
        return np.full_like(t, g0)
    # the truncation degree certified at t_max covers every smaller t
    cdef double[::1] al_mv = al
    cdef double[::1] z_max = cf * tmax ** al
    cdef double probe = 0.0
    cdef long k_end = 0
    cdef int st
    with nogil:
        st = _ml_multi_core(al_mv, beta, z_max, abs_tol, max_degree,
                            &probe, &k_end)
    if st == 5:
        raise MemoryError()
    if st:
        _raise_status(st, max_degree)
    k_end = min(k_end + 2, max_degree)
    cdef long k

    # signed power tables: Z[i][li*n + j] = (coefs[i] * t_j**alphas[i])**li
    cdef cnp.ndarray[cnp.float64_t, ndim=2] base = \
        np.empty((p, n), dtype=np.float64)
    cdef int i
    for i in range(p):
        base[i] = cf[i] * t ** al[i]
    cdef Py_ssize_t tbl = (k_end + 1) * n
    cdef double *Z = <double *> malloc(p * tbl * sizeof(double))
    cdef long *l = <long *> malloc(p * sizeof(long))
    cdef double *lg_fact = <double *> malloc((k_end + 2) * sizeof(double))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acc = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] carry = np.zeros(n, dtype=np.float64)
    if Z == NULL or l == NULL or lg_fact == NULL:
        free(Z); free(l); free(lg_fact)
        raise MemoryError()

    cdef Py_ssize_t j, jmax = <Py_ssize_t> np.argmax(t)
    cdef long li
    cdef double c, term, yv, sv, dot
    cdef double abs_tmax = 0.0
    with nogil:
        for i in range(p):
            for j in range(n):
                Z[i * tbl + j] = 1.0
            for li in range(1, k_end + 1):
                for j in range(n):
                    Z[i * tbl + li * n + j] = \
                        Z[i * tbl + (li - 1) * n + j] * base[i, j]
        for k in range(k_end + 2):
            lg_fact[k] = lgamma(k + 1.0)
        for k in range(k_end + 1):
            for i in range(p):
                l[i] = 0
            l[0] = k
            while True:
                c = lg_fact[k]
                dot = 0.0
                for i in range(p):
                    li = l[i]
                    if li:
                        c -= lg_fact[li]
                        dot += al[i] * li
                c = exp(c - lgamma(beta + dot))
                # accumulate c * prod_i Z_i[l_i, j] over the grid (Kahan)
                for j in range(n):
                    term = c
                    for i in range(p):
                        term *= Z[i * tbl + l[i] * n + j]
                    yv = term - carry[j]
                    sv = acc[j] + yv
                    carry[j] = (sv - acc[j]) - yv
                    acc[j] = sv
                term = c
                for i in range(p):
                    term *= Z[i * tbl + l[i] * n + jmax]
                abs_tmax += fabs(term)
                if not next_composition(l, p):
                    break
    free(Z); free(l); free(lg_fact)
    cdef double vt = float(acc[jmax])
    if abs_tmax > ABS_SUM_LIMIT * (1.0 if fabs(vt) < 1.0 else fabs(vt)):
        _raise_status(2, max_degree)
    return acc
