"""Canonical SL2(Z)-orbit representatives for integer-matrix cubic forms.

Negative reduced discriminant: the Hessian is positive definite and is
brought into the Gauss domain. Positive reduced discriminant: the form
factors over R as (linear) * (definite quadratic) and the quadratic factor
is reduced instead; its coefficients lie in Z[alpha] for the real root alpha,
and every comparison is decided exactly.

Within the finite set of forms sharing the reduced covariant (the images
under its stabilizer, always containing -I), the lexicographically largest
coefficient tuple is the canonical representative.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

from .forms import (
    CubicForm,
    UnimodularMatrix,
    act,
    hessian,
    rational_root,
    reduced_disc,
    DegenerateFormError,
)

T = lambda n: UnimodularMatrix(1, 0, n, 1)  # noqa: E731  (x, y) -> (x + n y, y)
S = UnimodularMatrix(0, 1, -1, 0)  # (x, y) -> (-y, x)


def mirror(g: UnimodularMatrix) -> UnimodularMatrix:
    """Conjugation by diag(1, -1); the Hessian covariant transforms through it."""
    return UnimodularMatrix(g.p, -g.q, -g.r, g.s)


@lru_cache(maxsize=1)
def small_sl2() -> tuple[UnimodularMatrix, ...]:
    """SL2(Z) matrices with entries in {-1, 0, 1}; they contain every stabilizer of a reduced form."""
    out = []
    for p, q, r, s in product((-1, 0, 1), repeat=4):
        if p * s - q * r == 1:
            out.append(UnimodularMatrix(p, q, r, s))
    return tuple(out)


# -- quadratic forms with coefficients in Z[alpha] --------------------------
#
# An element of Z[alpha] is a tuple (c0, c1, c2) meaning c0 + c1 a + c2 a^2.
# For rational alpha the same code runs with alpha a Fraction.


class RealRoot:
    """The real root of an integer polynomial, isolated by a rational interval."""

    def __init__(self, poly: Sequence[int], lo: Fraction, hi: Fraction, exact: Fraction | None = None):
        self.poly = tuple(poly)  # ascending coefficients
        self.lo, self.hi = lo, hi
        self.exact = exact

    @classmethod
    def of_cubic(cls, poly: Sequence[int]) -> RealRoot:
        """Unique real root of a cubic with negative discriminant and no rational roots."""
        bound = 1 + Fraction(max(abs(c) for c in poly[:3]), abs(poly[3]))
        lo, hi = -bound, bound
        slo = _sign(_eval(poly, lo))
        # the cubic has exactly one real root, so a sign change brackets it
        while hi - lo > Fraction(1, 1 << 20) * (1 + abs(lo)):
            mid = (lo + hi) / 2
            sm = _sign(_eval(poly, mid))
            if sm == 0:
                return cls(poly, mid, mid, exact=mid)
            if sm == slo:
                lo = mid
            else:
                hi = mid
        return cls(poly, lo, hi)

    def refine(self) -> None:
        if self.exact is not None:
            return
        slo = _sign(_eval(self.poly, self.lo))
        mid = (self.lo + self.hi) / 2
        sm = _sign(_eval(self.poly, mid))
        if sm == 0:
            self.lo = self.hi = self.exact = mid
        elif sm == slo:
            self.lo = mid
        else:
            self.hi = mid

    def approx(self) -> Fraction:
        return self.exact if self.exact is not None else (self.lo + self.hi) / 2

    def sign_of(self, g: Sequence[int]) -> int:
        """Exact sign of g(alpha) for g of degree < deg(poly) (irreducible poly) or any g (exact root)."""
        if self.exact is not None:
            return _sign(_eval(g, self.exact))
        if not any(g):
            return 0
        while True:
            lo, hi = _interval_eval(g, self.lo, self.hi)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            self.refine()


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _eval(poly: Sequence, x):
    acc = 0
    for c in reversed(poly):
        acc = acc * x + c
    return acc


def _interval_eval(poly: Sequence[int], lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    alo, ahi = Fraction(0), Fraction(0)
    for c in reversed(poly):
        cands = (alo * lo, alo * hi, ahi * lo, ahi * hi)
        alo, ahi = min(cands) + c, max(cands) + c
    return alo, ahi


def _lin(*terms) -> tuple:
    # integer combination of elements of Z[alpha]
    out = [0, 0, 0]
    for k, v in terms:
        for i in range(3):
            out[i] += k * v[i]
    return tuple(out)


class AlgQuadratic:
    """P x^2 + Q xy + R y^2 with P, Q, R in Z[alpha] (positive definite)."""

    def __init__(self, P, Q, R, root: RealRoot):
        self.P, self.Q, self.R = P, Q, R
        self.root = root

    def transform(self, g: UnimodularMatrix) -> AlgQuadratic:
        p, q, r, s = g.as_tuple()
        P, Q, R = self.P, self.Q, self.R
        return AlgQuadratic(
            _lin((p * p, P), (p * q, Q), (q * q, R)),
            _lin((2 * p * r, P), (p * s + q * r, Q), (2 * q * s, R)),
            _lin((r * r, P), (r * s, Q), (s * s, R)),
            self.root,
        )

    def sign(self, v) -> int:
        return self.root.sign_of(v)

    def key(self):
        return (self.P, self.Q, self.R)

    def approx_ratio(self) -> Fraction:
        a = self.root.approx()
        return _eval(self.Q, a) / _eval(self.P, a)


def _reduce_alg_quadratic(q: AlgQuadratic) -> tuple[AlgQuadratic, UnimodularMatrix]:
    g = UnimodularMatrix(1, 0, 0, 1)
    for _ in range(10_000):
        P, Q, R = q.P, q.Q, q.R
        # translate so that -P < Q <= P
        if q.sign(_lin((1, P), (1, Q))) <= 0 or q.sign(_lin((1, Q), (-1, P))) > 0:
            for _ in range(64):
                q.root.refine()
            n = int((1 - q.approx_ratio()) // 2)
            while True:
                t = q.transform(T(n))
                if q.sign(_lin((1, t.P), (1, t.Q))) <= 0:
                    n += 1
                elif q.sign(_lin((1, t.Q), (-1, t.P))) > 0:
                    n -= 1
                else:
                    break
            q, g = t, T(n) @ g
            continue
        c = q.sign(_lin((1, P), (-1, R)))
        if c > 0 or (c == 0 and q.sign(Q) < 0):
            q, g = q.transform(S), S @ g
            continue
        return q, g
    raise RuntimeError("reduction did not terminate")


def _quadratic_factor(f: CubicForm) -> AlgQuadratic:
    """The definite factor q of f = l * q, normalized positive definite."""
    a, b, c, d = f.coeffs
    root = rational_root(f)
    if root is not None:
        x0, y0 = root
        # f = (y0 x - x0 y) * (P x^2 + Q xy + R y^2), exact division
        e = [a, 3 * b, 3 * c, d]
        if y0 != 0:
            P = Fraction(e[0], y0)
            Q = Fraction(e[1] + x0 * P, y0)
            R = Fraction(e[2] + x0 * Q, y0)
        else:
            # l = -x0 y with x0 = 1: f = -y * q
            P, Q, R = Fraction(-e[1]), Fraction(-e[2]), Fraction(-e[3])
        coeffs = [P, Q, R]
        if P < 0:
            coeffs = [-v for v in coeffs]
        den = 1
        for v in coeffs:
            den = den * v.denominator // _gcd(den, v.denominator)
        P, Q, R = (int(v * den) for v in coeffs)
        root_obj = RealRoot((0, 1), Fraction(0), Fraction(0), exact=Fraction(0))
        return AlgQuadratic((P, 0, 0), (Q, 0, 0), (R, 0, 0), root_obj)
    # irreducible: alpha is the real root of a + 3b t + 3c t^2 + d t^3, d != 0
    alpha = RealRoot.of_cubic((a, 3 * b, 3 * c, d))
    P, Q, R = (3 * b, 3 * c, d), (3 * c, d, 0), (d, 0, 0)
    if d < 0:
        P, Q, R = _lin((-1, P)), _lin((-1, Q)), _lin((-1, R))
    return AlgQuadratic(P, Q, R, alpha)


def _gcd(a: int, b: int) -> int:
    from math import gcd

    return gcd(a, b)


def _pick(f0: CubicForm, stabilizers) -> CubicForm:
    best = f0
    for h in stabilizers:
        g = act(h, f0)
        if g.coeffs > best.coeffs:
            best = g
    return best


def reduce_neg_with_matrix(f: CubicForm) -> tuple[CubicForm, UnimodularMatrix]:
    D = reduced_disc(f)
    if D == 0:
        raise DegenerateFormError(f"{f} is degenerate")
    if D > 0:
        raise ValueError("reduce_neg needs negative reduced discriminant")
    A, B, C = hessian(f).as_tuple()
    if A <= 0:
        raise AssertionError("Hessian of a negative-discriminant form must be positive definite")
    # the Hessian of act(g, f) is the substitution of mirror(g) into the Hessian of f,
    # so each step T(n), S on the covariant is mirrored on the form
    g = UnimodularMatrix(1, 0, 0, 1)
    while True:
        if not -A < B <= A:
            n = (A - B) // (2 * A)
            B, C = B + 2 * A * n, A * n * n + B * n + C
            g = T(-n) @ g
        if A > C or (A == C and B < 0):
            A, B, C = C, -B, A
            g = S.inverse() @ g
            continue
        break
    f0 = act(g, f)
    H0 = hessian(f0)
    assert H0.as_tuple() == (A, B, C)
    stab = [h for h in small_sl2() if hessian(act(h, f0)) == H0]
    best = _pick(f0, stab)
    if best != f0:
        for h in stab:
            if act(h, f0) == best:
                g = h @ g
                break
    return best, g


def reduce_neg(f: CubicForm) -> CubicForm:
    return reduce_neg_with_matrix(f)[0]


def reduce_pos_with_matrix(f: CubicForm) -> tuple[CubicForm, UnimodularMatrix]:
    D = reduced_disc(f)
    if D == 0:
        raise DegenerateFormError(f"{f} is degenerate")
    if D < 0:
        raise ValueError("reduce_pos needs positive reduced discriminant")
    q = _quadratic_factor(f)
    q0, g = _reduce_alg_quadratic(q)
    f0 = act(g, f)
    if q0.root.exact is None:
        stab = [UnimodularMatrix(-1, 0, 0, -1)]
    else:
        stab = [h for h in small_sl2() if q0.transform(h).key() == q0.key()]
    best = _pick(f0, stab)
    if best != f0:
        for h in stab:
            if act(h, f0) == best:
                g = h @ g
                break
    return best, g


def reduce_pos(f: CubicForm) -> CubicForm:
    return reduce_pos_with_matrix(f)[0]


def canonical(f: CubicForm) -> CubicForm:
    """Canonical SL2(Z)-orbit representative, for either sign of discriminant."""
    if reduced_disc(f) < 0:
        return reduce_neg(f)
    return reduce_pos(f)


def canonical_with_matrix(f: CubicForm) -> tuple[CubicForm, UnimodularMatrix]:
    if reduced_disc(f) < 0:
        return reduce_neg_with_matrix(f)
    return reduce_pos_with_matrix(f)
