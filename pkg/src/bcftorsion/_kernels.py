"""Compiled inner loops for the streaming counts.

Every routine works on int64 and is only called with bounds that keep all
intermediate values far below 2**63 (the callers check this).
"""

import numpy as np
from numba import njit

# rows of the per-discriminant count table
TOTAL, PROJ, PROJ_RED, IRRED, IRRED_PROJ = range(5)

EPS = 2.220446049250313e-16


@njit(cache=True)
def isqrt(n):
    if n <= 0:
        return 0
    r = np.int64(np.sqrt(np.float64(n)))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@njit(cache=True)
def icbrt(n):
    # floor of the real cube root of n >= 0
    if n <= 0:
        return 0
    r = np.int64(np.float64(n) ** (1.0 / 3.0))
    while r * r * r > n:
        r -= 1
    while (r + 1) * (r + 1) * (r + 1) <= n:
        r += 1
    return r


@njit(cache=True)
def gcd(a, b):
    a = abs(a)
    b = abs(b)
    while b:
        a, b = b, a % b
    return a


@njit(cache=True)
def cdiv(a, b):
    return -((-a) // b)


@njit(cache=True)
def _monic(u, p2, p1, p0):
    return ((u + p2) * u + p1) * u + p0


@njit(cache=True)
def _root_in_monotone(lo, hi, p2, p1, p0, increasing):
    if lo > hi:
        return False
    vlo = _monic(lo, p2, p1, p0)
    vhi = _monic(hi, p2, p1, p0)
    if vlo == 0 or vhi == 0:
        return True
    if not increasing:
        vlo, vhi = -vlo, -vhi
    if vlo > 0 or vhi < 0:
        return False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        v = _monic(mid, p2, p1, p0)
        if v == 0:
            return True
        if not increasing:
            v = -v
        if v < 0:
            lo = mid
        else:
            hi = mid
    return False


@njit(cache=True)
def cubic_reducible(a, b, c, d):
    """Whether a x^3 + 3b x^2 y + 3c x y^2 + d y^3 has a rational root.

    With u = a t the root condition becomes an integer root of the monic
    cubic u^3 + 3b u^2 + 3ac u + a^2 d.
    """
    if a == 0 or d == 0:
        return True
    p2 = 3 * b
    p1 = 3 * a * c
    p0 = a * a * d
    bound = 2.0 * max(abs(p2), np.sqrt(abs(p1)), (abs(p0) / 2.0) ** (1.0 / 3.0)) + 2.0
    R = np.int64(bound) + 1
    A = b * b - a * c  # critical points of the monic cubic are -b +- sqrt(A)
    if A <= 0:
        return _root_in_monotone(-R, R, p2, p1, p0, True)
    s = isqrt(A)
    for u in (-b - s - 1, -b - s, -b + s, -b + s + 1):
        if _monic(u, p2, p1, p0) == 0:
            return True
    if _root_in_monotone(-R, min(R, -b - s - 2), p2, p1, p0, True):
        return True
    if _root_in_monotone(max(-R, -b - s + 1), min(R, -b + s - 1), p2, p1, p0, False):
        return True
    return _root_in_monotone(max(-R, -b + s + 2), R, p2, p1, p0, True)


@njit(cache=True)
def reduced_disc(a, b, c, d):
    return -3 * b * b * c * c + 4 * a * c * c * c + 4 * b * b * b * d + a * a * d * d - 6 * a * b * c * d


@njit(cache=True)
def _positive_first(a, b, c, d):
    # f is the larger of f, -f in lexicographic order
    if a != 0:
        return a > 0
    if b != 0:
        return b > 0
    if c != 0:
        return c > 0
    return d > 0


@njit(cache=True)
def _push(buf, n, a, b, c, d):
    if n < buf.shape[0]:
        buf[n, 0] = a
        buf[n, 1] = b
        buf[n, 2] = c
        buf[n, 3] = d
    return n + 1


@njit(cache=True)
def _record(counts, m, proj, red):
    counts[TOTAL, m] += 1
    if proj:
        counts[PROJ, m] += 1
        if red:
            counts[PROJ_RED, m] += 1
    if not red:
        counts[IRRED, m] += 1
        if proj:
            counts[IRRED_PROJ, m] += 1


@njit(cache=True)
def _neg_visit(a, b, c, d, X, counts, special, nspec, collect, ncol, do_collect):
    A = b * b - a * c
    B = a * d - b * c
    C = c * c - b * d
    if not (-A < B <= A <= C):
        return nspec, ncol
    if A == C and B < 0:
        return nspec, ncol
    m = 4 * A * C - B * B
    if m <= 0 or m >= X:
        return nspec, ncol
    if A == C and (B == 0 or B == A):
        # extra automorphisms of the covariant: settled exactly by the caller
        return _push(special, nspec, a, b, c, d), ncol
    if not _positive_first(a, b, c, d):
        return nspec, ncol
    proj = gcd(gcd(A, B), C) == 1
    red = cubic_reducible(a, b, c, d)
    _record(counts, m, proj, red)
    if do_collect:
        ncol = _push(collect, ncol, a, b, c, d)
    return nspec, ncol


@njit(cache=True, nogil=True)
def neg_kernel(a_lo, a_hi, X, counts, special, collect, do_collect):
    """Visit every form with reduced Hessian and 0 < -disc < X, a in [a_lo, a_hi)."""
    x4 = np.float64(X) ** 0.25
    amax = np.int64(1.0746 * x4) + 1
    bmax = amax
    nspec = 0
    ncol = 0
    for a in range(max(a_lo, -amax), min(a_hi, amax + 1)):
        if a != 0:
            cmax = icbrt((4 * X) // (3 * abs(a)) + 1) + 1
        for b in range(-bmax, bmax + 1):
            if a == 0:
                if b == 0:
                    continue
                A = b * b
                for c in range(-abs(b), abs(b) + 1):
                    B = -b * c
                    if B <= -A or B > A:
                        continue
                    Cmax = (X - 1 + B * B) // (4 * A)
                    lo_t = c * c - Cmax
                    hi_t = c * c - A
                    if b > 0:
                        dlo, dhi = cdiv(lo_t, b), hi_t // b
                    else:
                        dlo, dhi = cdiv(hi_t, b), lo_t // b
                    for d in range(dlo, dhi + 1):
                        nspec, ncol = _neg_visit(a, b, c, d, X, counts, special, nspec, collect, ncol, do_collect)
                continue
            for c in range(-cmax, cmax + 1):
                A = b * b - a * c
                if A <= 0 or 3 * A * A >= X:
                    continue
                lo = b * c - A + 1
                hi = b * c + A
                if a > 0:
                    dlo, dhi = cdiv(lo, a), hi // a
                else:
                    dlo, dhi = cdiv(hi, a), lo // a
                for d in range(dlo, dhi + 1):
                    nspec, ncol = _neg_visit(a, b, c, d, X, counts, special, nspec, collect, ncol, do_collect)
    return nspec, ncol


@njit(cache=True)
def _reduced_pqr(P, Q, R):
    return (-P < Q <= P < R) or (0 <= Q <= P == R)


@njit(cache=True)
def _real_root(a, b, c, d):
    # the unique real root of d t^3 + 3c t^2 + 3b t + a (d != 0), with an error radius
    bound = 1.0 + max(abs(a), 3.0 * abs(b), 3.0 * abs(c)) / abs(d)
    lo = -bound
    hi = bound
    s_lo = -1.0 if d > 0 else 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        v = ((d * mid + 3.0 * c) * mid + 3.0 * b) * mid + a
        if v == 0.0:
            lo = hi = mid
            break
        if (v > 0) == (s_lo > 0):
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    at = abs(t)
    size = abs(a) + 3.0 * abs(b) * at + 3.0 * abs(c) * at * at + abs(d) * at * at * at
    deriv = abs(3.0 * d * t * t + 6.0 * c * t + 3.0 * b)
    if deriv == 0.0:
        return t, np.inf
    return t, 16.0 * EPS * size / deriv + 4.0 * EPS * at + (hi - lo)


@njit(cache=True)
def _pos_visit(a, b, c, d, X, counts, uncertain, nunc, collect, ncol, do_collect):
    D = reduced_disc(a, b, c, d)
    if D <= 0 or D >= X:
        return nunc, ncol
    red = True
    if a == 0 or d == 0:
        # rational root at (1:0) or (0:1): the quadratic factor has integer coefficients
        if a == 0:
            P, Q, R = 3 * b, 3 * c, d
            if b < 0:
                P, Q, R = -P, -Q, -R
        else:
            P, Q, R = a, 3 * b, 3 * c
            if a < 0:
                P, Q, R = -P, -Q, -R
        if not _reduced_pqr(P, Q, R):
            return nunc, ncol
        if P == R and (Q == 0 or Q == P):
            return _push(uncertain, nunc, a, b, c, d), ncol
    else:
        t, err = _real_root(a, b, c, d)
        fP = 3.0 * b + 3.0 * c * t + d * t * t
        fQ = 3.0 * c + d * t
        fR = np.float64(d)
        if d < 0:
            fP, fQ, fR = -fP, -fQ, -fR
        if not np.isfinite(err):
            return _push(uncertain, nunc, a, b, c, d), ncol
        at = abs(t)
        rnd = 8.0 * EPS * (3.0 * abs(b) + 3.0 * abs(c) * at + abs(d) * at * at)
        dP = (3.0 * abs(c) + 2.0 * abs(d) * at + abs(d) * err) * err + rnd
        dQ = abs(d) * err + rnd
        tol = 4.0 * (dP + dQ) + 1e-12 * (abs(fP) + abs(fQ) + abs(fR))
        e1 = fP + fQ
        e2 = fP - fQ
        e3 = fR - fP
        if abs(e1) <= tol or abs(e2) <= tol or abs(e3) <= tol:
            return _push(uncertain, nunc, a, b, c, d), ncol
        if not (e1 > 0 and e2 > 0 and e3 > 0):
            return nunc, ncol
        red = cubic_reducible(a, b, c, d)
    if not _positive_first(a, b, c, d):
        return nunc, ncol
    A = b * b - a * c
    B = a * d - b * c
    C = c * c - b * d
    proj = gcd(gcd(A, B), C) == 1
    _record(counts, D, proj, red)
    if do_collect:
        ncol = _push(collect, ncol, a, b, c, d)
    return nunc, ncol


@njit(cache=True, nogil=True)
def pos_kernel(a_lo, a_hi, X, counts, uncertain, collect, do_collect):
    """Visit every form with reduced quadratic factor and 0 < disc < X, a in [a_lo, a_hi)."""
    x4 = np.float64(X) ** 0.25
    amax = np.int64(2.4495 * x4) + 1
    bmax = np.int64(1.3732 * x4) + 1
    nunc = 0
    ncol = 0
    for a in range(max(a_lo, -amax), min(a_hi, amax + 1)):
        a2 = a * a
        if a != 0:
            cmax = icbrt((20 * X) // (3 * abs(a)) + 1) + 1
        for b in range(-bmax, bmax + 1):
            if a == 0:
                if b == 0:
                    continue
                b2 = b * b
                for c in range(-abs(b), abs(b) + 1):
                    # disc = b^2 (4bd - 3c^2) with 1 <= 4bd - 3c^2 <= (X - 1) / b^2
                    lo_t = 3 * c * c + 1
                    hi_t = 3 * c * c + (X - 1) // b2
                    if b > 0:
                        dlo, dhi = cdiv(lo_t, 4 * b), hi_t // (4 * b)
                    else:
                        dlo, dhi = cdiv(hi_t, 4 * b), lo_t // (4 * b)
                    for d in range(dlo, dhi + 1):
                        nunc, ncol = _pos_visit(a, b, c, d, X, counts, uncertain, nunc, collect, ncol, do_collect)
                continue
            for c in range(-cmax, cmax + 1):
                # (a^2 d - 3abc + 2b^3)^2 = a^2 disc + 4 A^3
                A = b * b - a * c
                base = 3 * a * b * c - 2 * b * b * b
                hi2 = 4 * A * A * A + a2 * X
                if hi2 <= 0:
                    continue
                wmax = isqrt(hi2 - 1)
                if A > 0:
                    wmin = isqrt(4 * A * A * A) + 1
                elif A == 0:
                    wmin = 1
                else:
                    wmin = 0
                if wmin > wmax:
                    continue
                # W in [wmin, wmax] and in [-wmax, -wmin] (W = 0 only once)
                dlo, dhi = cdiv(wmin + base, a2), (wmax + base) // a2
                for d in range(dlo, dhi + 1):
                    nunc, ncol = _pos_visit(a, b, c, d, X, counts, uncertain, nunc, collect, ncol, do_collect)
                top = -wmin if wmin > 0 else -1
                dlo, dhi = cdiv(-wmax + base, a2), (top + base) // a2
                for d in range(dlo, dhi + 1):
                    nunc, ncol = _pos_visit(a, b, c, d, X, counts, uncertain, nunc, collect, ncol, do_collect)
    return nunc, ncol


# -- class group 3-torsion over whole discriminant ranges --------------------


@njit(cache=True)
def xgcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


@njit(cache=True)
def compose(a1, b1, c1, a2, b2, c2, D):
    if abs(a1) > abs(a2):
        a1, b1, c1, a2, b2, c2 = a2, b2, c2, a1, b1, c1
    s = (b1 + b2) // 2
    n = b2 - s
    d, y1, _ = xgcd(a2, a1)
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, x2, y2 = xgcd(s, d)
        y2 = -y2
    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    c3 = (b3 * b3 - D) // (4 * a3)
    return a3, b3, c3


@njit(cache=True)
def reduce_definite(a, b, c):
    while True:
        if not (-a < b <= a):
            n = (a - b) // (2 * a)
            b, c = b + 2 * a * n, a * n * n + b * n + c
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return a, b, c


@njit(cache=True)
def neg_cl3_kernel(X, out):
    """out[m] = number of 3-torsion classes for discriminant -m, 0 < m < X."""
    amax = isqrt((X - 1) // 3) + 1
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            cmax = (X - 1 + b * b) // (4 * a)
            for c in range(a, cmax + 1):
                if c == a and b < 0:
                    continue
                if gcd(gcd(a, b), c) != 1:
                    continue
                m = 4 * a * c - b * b
                a2, b2, c2 = compose(a, b, c, a, b, c, -m)
                a2, b2, c2 = reduce_definite(a2, b2, c2)
                ib = -b
                if b == a or a == c:
                    ib = abs(b)
                if a2 == a and b2 == ib and c2 == c:
                    out[m] += 1


@njit(cache=True)
def _normal_b(b, a, D, s):
    m = 2 * abs(a)
    if a * a < D:
        return s - ((s - b) % m)
    r = b % m
    if r > abs(a):
        return r - m
    return r


@njit(cache=True)
def _is_reduced_indef(a, b, D):
    if b <= 0 or b * b >= D:
        return False
    t = 2 * abs(a) - b
    return (t <= 0 or t * t < D) and D < (b + 2 * abs(a)) ** 2


@njit(cache=True)
def _rho(a, b, c, D, s):
    b2 = _normal_b(-b, c, D, s)
    return c, b2, (b2 * b2 - D) // (4 * c)


@njit(cache=True)
def reduce_indefinite(a, b, c, D, s):
    b = _normal_b(b, a, D, s)
    c = (b * b - D) // (4 * a)
    while not _is_reduced_indef(a, b, D):
        a, b, c = _rho(a, b, c, D, s)
    return a, b, c


@njit(cache=True)
def _find(keys, key):
    lo = 0
    hi = keys.shape[0] - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        if keys[mid] == key:
            return mid
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid - 1
    return -1


KEY_SHIFT = 1 << 22


@njit(cache=True)
def _pos_three_torsion(D, fa, fb, fc, n):
    # fa, fb, fc: all reduced forms of discriminant D (both signs of a)
    s = isqrt(D)
    keys = np.empty(n, dtype=np.int64)
    for i in range(n):
        keys[i] = (fa[i] + KEY_SHIFT) * KEY_SHIFT + fb[i]
    order = np.argsort(keys)
    keys = keys[order]
    A = fa[:n][order]
    B = fb[:n][order]
    C = fc[:n][order]
    cyc = np.full(n, -1, dtype=np.int64)
    ncyc = 0
    reps = np.empty(n, dtype=np.int64)
    for i in range(n):
        if cyc[i] >= 0:
            continue
        if gcd(gcd(A[i], B[i]), C[i]) != 1:
            continue
        j = i
        while cyc[j] < 0:
            cyc[j] = ncyc
            a2, b2, c2 = _rho(A[j], B[j], C[j], D, s)
            j = _find(keys, (a2 + KEY_SHIFT) * KEY_SHIFT + b2)
        reps[ncyc] = i
        ncyc += 1
    hits = 0
    for k in range(ncyc):
        i = reps[k]
        a2, b2, c2 = compose(A[i], B[i], C[i], A[i], B[i], C[i], D)
        a2, b2, c2 = reduce_indefinite(a2, b2, c2, D, s)
        sq = _find(keys, (a2 + KEY_SHIFT) * KEY_SHIFT + b2)
        inv = _find(keys, (C[i] + KEY_SHIFT) * KEY_SHIFT + B[i])
        if cyc[sq] == cyc[inv]:
            hits += 1
    return hits


@njit(cache=True, nogil=True)
def pos_cl3_kernel(D_lo, D_hi, out):
    """out[D] = 3-torsion of the narrow class group for non-square D in [D_lo, D_hi)."""
    width = D_hi - D_lo
    cnt = np.zeros(width + 1, dtype=np.int64)
    root = isqrt(D_hi - 1) + 1
    for sweep in range(2):
        if sweep == 1:
            offs = np.zeros(width + 1, dtype=np.int64)
            for i in range(width):
                offs[i + 1] = offs[i] + cnt[i]
            total = offs[width]
            fa = np.empty(total, dtype=np.int64)
            fb = np.empty(total, dtype=np.int64)
            fc = np.empty(total, dtype=np.int64)
            fill = offs[:width].copy()
        for b in range(1, root + 1):
            b2 = b * b
            if b2 >= D_hi:
                break
            for a in range(1, root + 1):
                # D = b^2 + 4 a m with max(b^2, (2a - b)^2) < D < (2a + b)^2
                lo = b2 + 1
                if 2 * a > b:
                    lo = max(lo, (2 * a - b) ** 2 + 1)
                hi = (2 * a + b) ** 2 - 1
                lo = max(lo, D_lo)
                hi = min(hi, D_hi - 1)
                if lo > hi:
                    if (2 * a - b) ** 2 >= D_hi and 2 * a > b:
                        break
                    continue
                m_lo = cdiv(lo - b2, 4 * a)
                m_hi = (hi - b2) // (4 * a)
                for m in range(m_lo, m_hi + 1):
                    D = b2 + 4 * a * m
                    k = D - D_lo
                    if sweep == 0:
                        cnt[k] += 2
                    else:
                        p = fill[k]
                        fa[p], fb[p], fc[p] = a, b, -m
                        fa[p + 1], fb[p + 1], fc[p + 1] = -a, b, m
                        fill[k] = p + 2
    for k in range(width):
        D = D_lo + k
        if D % 4 > 1 or cnt[k] == 0:
            continue
        r = isqrt(D)
        if r * r == D:
            continue
        o = offs[k]
        n = cnt[k]
        out[D] = _pos_three_torsion(D, fa[o:o + n], fb[o:o + n], fc[o:o + n], n)
