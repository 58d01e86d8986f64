"""Pure NumPy implementations of the series-evaluation kernels.

This module is the fallback backend used when the compiled extension
(``fracwave._kernels``) is unavailable.  Both backends expose the same four
functions:

    ml_one(alpha, beta, z, abs_tol, max_degree)          -> float
    ml_one_grid(alpha, beta, z, abs_tol, max_degree)     -> ndarray
    ml_multi(alphas, beta, z, abs_tol, max_degree)       -> float
    ml_multi_grid(alphas, beta, coefs, t, abs_tol, max_degree) -> ndarray

``ml_one`` evaluates the two-parameter Mittag-Leffler series
``sum_k z^k / Gamma(alpha*k + beta)``; ``ml_multi`` evaluates its multivariate
generalisation (outer sum over total degree, inner sum over compositions,
multinomial weights).  The ``*_grid`` variants evaluate many points with one
term enumeration.

Numerical strategy
------------------
* Truncation is certified: the outer sum stops once a geometric majorant of
  the tail (ratio bound from the term-magnitude recurrences) drops below
  ``abs_tol``; ``NonConvergenceError`` is raised if that never happens within
  ``max_degree``.
* Accumulation is compensated.  For integer ``alpha`` and ``beta`` the terms
  themselves are carried in double-double precision with exact integer-step
  gamma recurrences, which keeps large alternating sums (e.g. ``z = -100``)
  accurate to ~1e-12 absolute.  For non-integer indices the per-term error is
  set by ``lgamma`` and the achievable absolute accuracy degrades like
  ``1e-15 * sum_k |term_k|``; inputs for which that sum exceeds ~1e12 are
  rejected as non-convergent rather than silently returned.
* For a single negative argument with ``|z|**(1/alpha) >= 36`` the series is
  replaced by the large-argument expansion (inverse-power series plus, for
  ``1 < alpha <= 2``, the decaying oscillatory pair), whose error there is
  below 1e-15 absolute.  No multivariate analogue is attempted: multivariate
  arguments outside the convergent range raise ``NonConvergenceError``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NonConvergenceError

BACKEND = "python"

# Switch to the large-argument expansion at |z|**(1/alpha) >= this value.
# The exact double-double series stays accurate much further than the
# lgamma-based general series, so the two paths switch at different points
# (balancing series roundoff ~eps*exp(x) against expansion error ~exp(-x)).
ASYMPTOTIC_SWITCH_EXACT = 36.0
ASYMPTOTIC_SWITCH_GENERAL = 17.5

# Refuse alternating series whose absolute-value term sum exceeds this
# multiple of the result (cancellation would leave fewer than ~4 correct
# digits even with compensation).
ABS_SUM_LIMIT = 1e12

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant


# ---------------------------------------------------------------------------
# double-double helpers (scalar)


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    p = a * b
    ca = _SPLITTER * a
    ah = ca - (ca - a)
    al = a - ah
    cb = _SPLITTER * b
    bh = cb - (cb - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    e += al + bl
    return _two_sum(s, e)


def _dd_mul_d(ah, al, x):
    p, e = _two_prod(ah, x)
    e += al * x
    return _two_sum(p, e)


def _dd_div_d(ah, al, x):
    q1 = (ah + al) / x
    p, e = _two_prod(q1, x)
    q2 = ((ah - p) + (al - e)) / x
    return _two_sum(q1, q2)


def _as_positive_int(x):
    """Return round(x) when x is (numerically) a positive integer, else None."""
    i = int(round(x))
    if i >= 1 and abs(x - i) <= 1e-12 * max(1.0, abs(x)):
        return i
    return None


def _sinpi(y):
    # sin(pi*y) with argument reduction done on y (period 2, odd).
    m = math.fmod(y, 2.0)
    return math.sin(math.pi * m)


def _recip_gamma(y):
    """1/Gamma(y) for real y, zero at the poles."""
    if y > 0.5:
        return math.exp(-math.lgamma(y))
    s = _sinpi(y)
    if s == 0.0:
        return 0.0
    # reflection: 1/Gamma(y) = sin(pi*y) * Gamma(1-y) / pi
    ln = math.lgamma(1.0 - y) - math.log(math.pi)
    if ln > 700.0:
        raise NonConvergenceError("reciprocal gamma overflows in expansion")
    return s * math.exp(ln)


# ---------------------------------------------------------------------------
# one-variable function


def _ml_one_asymptotic(alpha, beta, z, abs_tol):
    """Large-argument expansion for z < 0 with |z|**(1/alpha) large.

    Inverse-power series -sum_k z^{-k}/Gamma(beta - alpha*k), truncated at
    its smallest term, plus the decaying oscillatory branch pair for
    1 < alpha <= 2 (which carries the entire value at alpha = 2).
    """
    x = -z
    lnx = math.log(x)
    lnpi = math.log(math.pi)
    total = 0.0
    prev_env = math.inf
    for k in range(1, 81):
        y = beta - alpha * k
        # envelope = x^{-k} * |1/Gamma(y)| with the sine factor set to 1;
        # it decreases to the optimal-truncation point and then diverges
        if y > 0.5:
            env = math.exp(-k * lnx - math.lgamma(y))
            val = env
        else:
            ln_env = -k * lnx + math.lgamma(1.0 - y) - lnpi
            if ln_env > 690.0:
                break
            env = math.exp(ln_env)
            yr = round(y)
            if yr <= 0 and abs(y - yr) < 1e-9:
                val = 0.0  # pole of Gamma: the term vanishes exactly
            else:
                val = env * _sinpi(y)
        if env > prev_env:
            break
        prev_env = env
        # z^{-k} = (-1)^k x^{-k}; the expansion is -sum z^{-k}/Gamma(...)
        total += val if (k % 2 == 1) else -val
        if env <= min(abs_tol, 1e-16):
            break
    if 1.0 < alpha <= 2.0:
        r = x ** (1.0 / alpha)
        co = math.cos(math.pi / alpha)
        expo = r * co
        if expo > -745.0:
            amp = (2.0 / alpha) * r ** (1.0 - beta) * math.exp(expo)
            phase = r * math.sin(math.pi / alpha) + math.pi * (1.0 - beta) / alpha
            total += amp * math.cos(phase)
    return total


def _ml_one_series_exact(ia, ib, z, abs_tol, max_degree):
    """Series with integer alpha=ia, beta=ib: exact double-double recurrences."""
    g0 = 1.0
    for i in range(2, ib):
        g0 *= i  # (ib-1)!, exact below 2**53 for the catalog range
    th, tl = _dd_div_d(1.0, 0.0, g0)
    sh, sl = th, tl
    az = abs(z)
    for k in range(max_degree):
        th, tl = _dd_mul_d(th, tl, z)
        prod = 1.0
        base = ib + ia * k
        for i in range(ia):
            prod *= base + i
        th, tl = _dd_div_d(th, tl, prod)
        sh, sl = _dd_add(sh, sl, th, tl)
        # first omitted term and a bound on subsequent ratios
        nxt = ib + ia * (k + 1)
        prod_next = 1.0
        for i in range(ia):
            prod_next *= nxt + i
        m1 = abs(th) * az / prod_next
        r = az / prod_next
        if r < 1.0 and m1 / (1.0 - r) <= abs_tol:
            return sh + sl
    raise NonConvergenceError(
        f"one-variable series not converged within degree {max_degree}"
    )


def _ml_one_series_general(alpha, beta, z, abs_tol, max_degree):
    az = abs(z)
    lnz = math.log(az)
    neg = z < 0.0
    sh, sl = _two_sum(math.exp(-math.lgamma(beta)), 0.0)
    abs_sum = sh
    lg_next = math.lgamma(beta + alpha)
    for k in range(1, max_degree + 1):
        lg_k = lg_next
        mag = math.exp(k * lnz - lg_k)
        term = -mag if (neg and k % 2 == 1) else mag
        sh, sl = _dd_add(sh, sl, term, 0.0)
        abs_sum += mag
        lg_next = math.lgamma(beta + alpha * (k + 1))
        m1 = math.exp((k + 1) * lnz - lg_next)
        r = az * math.exp(lg_next - math.lgamma(beta + alpha * (k + 2)))
        if r < 1.0 and m1 / (1.0 - r) <= abs_tol:
            value = sh + sl
            if neg and abs_sum > ABS_SUM_LIMIT * max(1.0, abs(value)):
                raise NonConvergenceError(
                    "series cancellation exceeds double-precision headroom"
                )
            return value
    raise NonConvergenceError(
        f"one-variable series not converged within degree {max_degree}"
    )


def ml_one(alpha, beta, z, abs_tol, max_degree):
    if z == 0.0:
        return 1.0 / math.gamma(beta)
    if z > 0.0 and z ** (1.0 / alpha) > 690.0:
        raise NonConvergenceError("series value overflows double range")
    ia = _as_positive_int(alpha)
    ib = _as_positive_int(beta)
    exact = ia is not None and ib is not None
    if z < 0.0:
        switch = ASYMPTOTIC_SWITCH_EXACT if exact else ASYMPTOTIC_SWITCH_GENERAL
        if (-z) ** (1.0 / alpha) >= switch:
            return _ml_one_asymptotic(alpha, beta, z, abs_tol)
    if exact:
        return _ml_one_series_exact(ia, ib, z, abs_tol, max_degree)
    return _ml_one_series_general(alpha, beta, z, abs_tol, max_degree)


def ml_one_grid(alpha, beta, z, abs_tol, max_degree):
    z = np.ascontiguousarray(z, dtype=np.float64)
    out = np.empty_like(z)
    for i, zi in enumerate(z):
        out[i] = ml_one(alpha, beta, float(zi), abs_tol, max_degree)
    return out


# ---------------------------------------------------------------------------
# multivariate function


def _compositions(k, parts):
    """Yield all tuples of `parts` non-negative ints summing to k (colex)."""
    l = [0] * parts
    l[0] = k
    while True:
        yield tuple(l)
        # find leftmost nonzero among l[0..parts-2]
        j = 0
        while j < parts - 1 and l[j] == 0:
            j += 1
        if j == parts - 1:
            return
        l[j + 1] += 1
        rest = l[j] - 1
        l[j] = 0
        l[0] = rest


def _multi_ratio_start(beta, amin):
    """Degree from which the ratio-based tail rule may fire: all gamma
    arguments are then on the increasing branch, so the per-degree
    magnitude ratios decrease from here on."""
    return max(2, int(math.ceil((2.0 - beta) / amin)))


def _ml_multi_core(alphas, beta, z, abs_tol, max_degree):
    """Shared multivariate series loop; returns (value, degrees_used)."""
    p = len(z)
    amin = min(alphas)
    lnz = [math.log(abs(v)) for v in z]
    sgn = [1.0 if v > 0 else -1.0 for v in z]
    lg_fact = [math.lgamma(n + 1.0) for n in range(max_degree + 2)]

    sh, sl = 0.0, 0.0
    abs_sum = 0.0
    k0 = _multi_ratio_start(beta, amin)
    a_prev2 = a_prev1 = math.inf
    for k in range(max_degree + 1):
        a_k = 0.0
        for l in _compositions(k, p):
            ln_t = lg_fact[k]
            dot = 0.0
            sign = 1.0
            for i in range(p):
                li = l[i]
                if li:
                    ln_t += li * lnz[i] - lg_fact[li]
                    dot += alphas[i] * li
                    if sgn[i] < 0 and li % 2 == 1:
                        sign = -sign
            mag = math.exp(ln_t - math.lgamma(beta + dot))
            sh, sl = _dd_add(sh, sl, sign * mag, 0.0)
            a_k += mag
        abs_sum += a_k
        if abs_sum > 1e290:
            raise NonConvergenceError("multivariate series magnitude overflows")
        # geometric majorant built from the computed per-degree magnitudes
        if k >= k0 and a_k > 0.0 and a_prev1 < math.inf:
            r = max(a_k / a_prev1, a_prev1 / a_prev2)
            if r < 0.95 and a_k * r / (1.0 - r) <= abs_tol:
                value = sh + sl
                if abs_sum > ABS_SUM_LIMIT * max(1.0, abs(value)):
                    raise NonConvergenceError(
                        "multivariate series cancellation exceeds double headroom")
                return value, k
        a_prev2, a_prev1 = a_prev1, a_k
    raise NonConvergenceError(
        f"multivariate series not converged within total degree {max_degree}")


def ml_multi(alphas, beta, z, abs_tol, max_degree):
    alphas = [float(a) for a in alphas]
    z = [float(v) for v in z]
    keep = [i for i, v in enumerate(z) if v != 0.0]
    if not keep:
        return 1.0 / math.gamma(beta)
    alphas = [alphas[i] for i in keep]
    z = [z[i] for i in keep]
    if len(z) == 1:
        return ml_one(alphas[0], beta, z[0], abs_tol, max_degree)
    return _ml_multi_core(alphas, beta, z, abs_tol, max_degree)[0]


def ml_multi_grid(alphas, beta, coefs, t, abs_tol, max_degree):
    """Evaluate E_{(alphas),beta}(coefs[0]*t^alphas[0], ...) on an array t >= 0."""
    alphas = [float(a) for a in alphas]
    coefs = [float(c) for c in coefs]
    t = np.ascontiguousarray(t, dtype=np.float64)
    keep = [i for i, c in enumerate(coefs) if c != 0.0]
    alphas = [alphas[i] for i in keep]
    coefs = [coefs[i] for i in keep]
    p = len(coefs)
    if p == 0:
        return np.full_like(t, 1.0 / math.gamma(beta))
    tmax = float(t.max())
    if p == 1:
        return ml_one_grid(alpha=alphas[0], beta=beta,
                           z=coefs[0] * t ** alphas[0],
                           abs_tol=abs_tol, max_degree=max_degree)

    if tmax == 0.0:
        return np.full_like(t, 1.0 / math.gamma(beta))
    # one term enumeration serves every grid point: each composition
    # contributes  c_l * t**dot_l  with dot_l = sum(alphas * l).  The
    # truncation degree certified at t_max covers every smaller t.
    z_max = [c * tmax ** a for a, c in zip(alphas, coefs)]
    _, k_end = _ml_multi_core(alphas, beta, z_max, abs_tol, max_degree)
    k_end = min(k_end + 2, max_degree)

    ln_c = [math.log(abs(c)) for c in coefs]
    sgn = [1.0 if c > 0 else -1.0 for c in coefs]
    lg_fact = [math.lgamma(n + 1.0) for n in range(k_end + 1)]
    coeff = []
    power = []
    for k in range(k_end + 1):
        for l in _compositions(k, p):
            ln_t = lg_fact[k]
            dot = 0.0
            sign = 1.0
            for i in range(p):
                li = l[i]
                if li:
                    ln_t += li * ln_c[i] - lg_fact[li]
                    dot += alphas[i] * li
                    if sgn[i] < 0 and li % 2 == 1:
                        sign = -sign
            coeff.append(sign * math.exp(ln_t - math.lgamma(beta + dot)))
            power.append(dot)
    coeff = np.asarray(coeff)
    power = np.asarray(power)
    tpow = tmax ** power
    if float(np.abs(coeff) @ tpow) > ABS_SUM_LIMIT * max(1.0, abs(float(coeff @ tpow))):
        raise NonConvergenceError(
            "multivariate series cancellation exceeds double headroom"
        )

    out = np.zeros_like(t)
    pos = t > 0.0
    lnt = np.log(t[pos])
    acc = np.zeros(lnt.shape)
    chunk = max(1, 4_000_000 // max(1, lnt.size))
    for start in range(0, coeff.size, chunk):
        sl = slice(start, start + chunk)
        acc += np.exp(np.multiply.outer(lnt, power[sl])) @ coeff[sl]
    out[pos] = acc
    out[~pos] = 1.0 / math.gamma(beta)
    return out
