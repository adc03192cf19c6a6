"""Cubic forms versus triples (O, I, delta).

O = Z + Z*tau with tau = (eps + sqrt(D))/2, so tau^2 = eps*tau + (D - eps)/4.
Elements of O (x) Q are pairs (x, y) of rationals meaning x + y*tau; the
same arithmetic covers square discriminants, where O (x) Q is Q x Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable

from .forms import CubicForm, hessian, is_projective, rational_root, reduced_disc, require_nondegenerate
from .quad_orders import QuadRing, ring_from_disc
from .reduction import canonical


class InvalidTripleError(ValueError):
    pass


@dataclass(frozen=True)
class QuadElement:
    """x + y*tau in O (x) Q for the order of discriminant D."""

    D: int
    x: Fraction
    y: Fraction

    @classmethod
    def of(cls, D: int, x, y=0) -> QuadElement:
        return cls(D, Fraction(x), Fraction(y))

    @property
    def eps(self) -> int:
        return self.D % 4

    @property
    def n(self) -> int:
        return (self.D - self.eps) // 4

    def _check(self, other: QuadElement) -> None:
        if other.D != self.D:
            raise ValueError("elements of different rings")

    def __add__(self, other: QuadElement) -> QuadElement:
        self._check(other)
        return QuadElement(self.D, self.x + other.x, self.y + other.y)

    def __sub__(self, other: QuadElement) -> QuadElement:
        self._check(other)
        return QuadElement(self.D, self.x - other.x, self.y - other.y)

    def __neg__(self) -> QuadElement:
        return QuadElement(self.D, -self.x, -self.y)

    def scale(self, k) -> QuadElement:
        return QuadElement(self.D, self.x * k, self.y * k)

    def __mul__(self, other: QuadElement) -> QuadElement:
        self._check(other)
        x1, y1, x2, y2 = self.x, self.y, other.x, other.y
        return QuadElement(
            self.D, x1 * x2 + self.n * y1 * y2, x1 * y2 + x2 * y1 + self.eps * y1 * y2
        )

    def conj(self) -> QuadElement:
        # tau -> eps - tau
        return QuadElement(self.D, self.x + self.eps * self.y, -self.y)

    def norm(self) -> Fraction:
        return self.x * self.x + self.eps * self.x * self.y - self.n * self.y * self.y

    def inverse(self) -> QuadElement:
        N = self.norm()
        if N == 0:
            raise ZeroDivisionError(f"{self} is not invertible")
        return self.conj().scale(1 / N)

    def __truediv__(self, other: QuadElement) -> QuadElement:
        return self * other.inverse()

    def __pow__(self, k: int) -> QuadElement:
        out = QuadElement.of(self.D, 1)
        for _ in range(k):
            out = out * self
        return out

    def is_integral(self) -> bool:
        return self.x.denominator == 1 and self.y.denominator == 1

    def canonical_triple(self) -> tuple[int, int, int]:
        """(u, v, w) with self = (u + v*tau)/w, w > 0, gcd(u, v, w) = 1."""
        w = self.x.denominator * self.y.denominator // gcd(self.x.denominator, self.y.denominator)
        u, v = int(self.x * w), int(self.y * w)
        g = gcd(gcd(u, v), w)
        return (u // g, v // g, w // g)

    def __repr__(self) -> str:
        u, v, w = self.canonical_triple()
        return f"({u} + {v}*tau)/{w}"


def tau(D: int) -> QuadElement:
    return QuadElement.of(D, 0, 1)


def sqrt_disc(D: int) -> QuadElement:
    """2*tau - eps, a square root of D."""
    return QuadElement.of(D, -(D % 4), 2)


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def hermite_basis(D: int, gens: Iterable[QuadElement]) -> tuple[QuadElement, QuadElement]:
    """Basis (u, v + w*tau) with u, w > 0 and 0 <= v < u of the lattice spanned by gens."""
    gens = list(gens)
    den = 1
    for e in gens:
        den = _lcm(den, _lcm(e.x.denominator, e.y.denominator))
    rows = [(int(e.x * den), int(e.y * den)) for e in gens]
    # column echelon on the tau-coordinate first
    w = 0
    for _, y in rows:
        w = gcd(w, y)
    if w == 0:
        raise ValueError("generators do not span a rank-2 lattice")
    # find integer combination with tau-coefficient w, then reduce the rest
    coeffs = _bezout_many([y for _, y in rows])
    vx = sum(c * x for c, (x, _) in zip(coeffs, rows))
    u = 0
    for x, y in rows:
        k = y // w
        u = gcd(u, x - k * vx)
    if u == 0:
        raise ValueError("generators do not span a rank-2 lattice")
    vx %= u
    return (QuadElement.of(D, Fraction(u, den)), QuadElement.of(D, Fraction(vx, den), Fraction(w, den)))


def _bezout_many(vals: list[int]) -> list[int]:
    # coefficients c with sum c_i vals_i = gcd(vals) >= 0
    from .quad_orders import _xgcd

    g, coeffs = 0, []
    for v in vals:
        g2, s, t = _xgcd(g, v)
        coeffs = [c * s for c in coeffs] + [t]
        g = g2
    return coeffs


@dataclass(frozen=True)
class QuadIdeal:
    """A lattice I = Z*alpha + Z*beta in O (x) Q that is a module over O, in Hermite basis."""

    ring: QuadRing
    alpha: QuadElement
    beta: QuadElement

    @classmethod
    def from_generators(cls, D: int, gens: Iterable[QuadElement]) -> QuadIdeal:
        alpha, beta = hermite_basis(D, gens)
        ideal = cls(ring_from_disc(D), alpha, beta)
        if not ideal.is_module():
            raise InvalidTripleError("lattice is not closed under multiplication by tau")
        return ideal

    @property
    def D(self) -> int:
        return self.ring.D

    @property
    def basis(self) -> tuple[QuadElement, QuadElement]:
        return (self.alpha, self.beta)

    def orientation(self) -> Fraction:
        return self.alpha.x * self.beta.y - self.alpha.y * self.beta.x

    def norm(self) -> Fraction:
        return abs(self.orientation())

    def coordinates(self, e: QuadElement) -> tuple[Fraction, Fraction]:
        """(s, t) with e = s*alpha + t*beta."""
        det = self.orientation()
        s = (e.x * self.beta.y - e.y * self.beta.x) / det
        t = (self.alpha.x * e.y - self.alpha.y * e.x) / det
        return s, t

    def contains(self, e: QuadElement) -> bool:
        s, t = self.coordinates(e)
        return s.denominator == 1 and t.denominator == 1

    def tau_matrix(self) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        t = tau(self.D)
        return (self.coordinates(t * self.alpha), self.coordinates(t * self.beta))

    def is_module(self) -> bool:
        t = tau(self.D)
        return self.contains(t * self.alpha) and self.contains(t * self.beta)

    def __mul__(self, other: QuadIdeal) -> QuadIdeal:
        gens = [x * y for x in self.basis for y in other.basis]
        return QuadIdeal.from_generators(self.D, gens)

    def scale(self, k: QuadElement) -> QuadIdeal:
        return QuadIdeal.from_generators(self.D, [k * self.alpha, k * self.beta])


def unit_ideal(D: int) -> QuadIdeal:
    return QuadIdeal(ring_from_disc(D), QuadElement.of(D, 1), tau(D))


@dataclass(frozen=True)
class Triple:
    ring: QuadRing
    ideal: QuadIdeal
    delta: QuadElement

    def check(self) -> None:
        a, b = self.ideal.basis
        for e in (a**3, a * a * b, a * b * b, b**3):
            if not (e / self.delta).is_integral():
                raise InvalidTripleError("I^3 is not contained in delta*O")
        if self.ideal.norm() ** 3 != self.delta.norm():
            raise InvalidTripleError("N(I)^3 != N(delta)")


def triple_to_form(t: Triple, basis: tuple[QuadElement, QuadElement] | None = None) -> CubicForm:
    """Read (a, b, c, d) off the tau-coefficients of alpha^3/delta, ..., beta^3/delta."""
    alpha, beta = basis if basis is not None else t.ideal.basis
    orient = alpha.x * beta.y - alpha.y * beta.x
    if orient <= 0:
        raise InvalidTripleError("basis is not positively oriented")
    coeffs = []
    for e in (alpha**3, alpha * alpha * beta, alpha * beta * beta, beta**3):
        q = e / t.delta
        if not q.is_integral():
            raise InvalidTripleError("non-integral quotient: I^3 is not contained in delta*O")
        coeffs.append(int(q.y))
    f = CubicForm(*coeffs)
    if reduced_disc(f) != t.ring.D:
        raise InvalidTripleError("triple does not satisfy N(I)^3 = N(delta)")
    return f


def e_coefficients(f: CubicForm) -> tuple[int, int]:
    """e1, e2 with alpha : beta = (e1 + b*tau) : (e2 + c*tau)."""
    a, b, c, d = f.coeffs
    eps = reduced_disc(f) % 4
    e1 = b * b * c - 2 * a * c * c + a * b * d - eps * b
    e2 = -(b * c * c - 2 * b * b * d + a * c * d + eps * c)
    return e1 // 2, e2 // 2


def form_basis(f: CubicForm) -> tuple[QuadElement, QuadElement]:
    """A positively oriented pair (alpha, beta) on which tau acts through the Hessian:

    tau*alpha = (B + eps)/2 * alpha + A*beta,  tau*beta = -C*alpha + (eps - B)/2 * beta.
    """
    D = reduced_disc(f)
    eps = D % 4
    A, B, C = hessian(f).as_tuple()
    if A != 0:
        alpha = QuadElement.of(D, A)
        beta = QuadElement.of(D, -(B + eps) // 2, 1)
    else:
        # square discriminant with A = 0: alpha is an eigenvector of tau
        alpha = QuadElement.of(D, -(eps - B) // 2, 1)
        if C != 0:
            beta = QuadElement.of(D, -C)
        else:
            beta = QuadElement.of(D, -(eps + B) // 2, 1)
    if alpha.x * beta.y - alpha.y * beta.x < 0:
        s = sqrt_disc(D)  # norm -D < 0 flips the orientation
        alpha, beta = s * alpha, s * beta
    return alpha, beta


def _primitive(alpha: QuadElement, beta: QuadElement) -> tuple[QuadElement, QuadElement]:
    # scale by a positive rational so the coordinates are coprime integers
    den = 1
    for e in (alpha, beta):
        den = _lcm(den, _lcm(e.x.denominator, e.y.denominator))
    vals = [int(v * den) for e in (alpha, beta) for v in (e.x, e.y)]
    g = 0
    for v in vals:
        g = gcd(g, v)
    k = Fraction(den, g)
    return alpha.scale(k), beta.scale(k)


def form_to_triple(f: CubicForm) -> Triple:
    require_nondegenerate(f)
    D = reduced_disc(f)
    R = ring_from_disc(D)
    alpha, beta = _primitive(*form_basis(f))
    # solve pi(z * alpha^3) = a, pi(z * alpha^2 beta) = b, ... for z = 1/delta
    prods = [alpha**3, alpha * alpha * beta, alpha * beta * beta, beta**3]
    targets = f.coeffs
    t = tau(D)
    rows = []
    for p in prods:
        # pi((z0 + z1 tau) * p) = z0 * p.y + z1 * (tau * p).y
        rows.append((p.y, (t * p).y))
    z = _solve_consistent(rows, targets)
    if z is None:
        raise InvalidTripleError(f"internal error: no delta for {f}")
    zinv = QuadElement(D, z[0], z[1])
    delta = zinv.inverse()
    ideal = QuadIdeal.from_generators(D, [alpha, beta])
    triple = Triple(R, ideal, delta)
    triple.check()
    # the triple must give back f in the basis (alpha, beta)
    if triple_to_form(triple, (alpha, beta)) != f:
        raise InvalidTripleError(f"internal error: triple does not reproduce {f}")
    return triple


def _solve_consistent(rows, targets) -> tuple[Fraction, Fraction] | None:
    for i in range(4):
        for j in range(i + 1, 4):
            (p, q), (r, s) = rows[i], rows[j]
            det = p * s - q * r
            if det == 0:
                continue
            z0 = (targets[i] * s - q * targets[j]) / det
            z1 = (p * targets[j] - r * targets[i]) / det
            if all(u * z0 + v * z1 == tg for (u, v), tg in zip(rows, targets)):
                return (z0, z1)
            return None
    return None


def triple_form(t: Triple) -> CubicForm:
    """Canonical representative of the class of a triple."""
    return canonical(triple_to_form(t))


def identity_triple(D: int) -> Triple:
    R = ring_from_disc(D)
    return Triple(R, unit_ideal(D), QuadElement.of(D, 1))


def identity_form(D: int) -> CubicForm:
    """Form of (O, O, 1) in the basis (1, tau): (0, 1, eps, (D + 3 eps)/4)."""
    return triple_to_form(identity_triple(D))


def compose(f1: CubicForm, f2: CubicForm) -> CubicForm:
    """Product of the classes of two projective forms, as a canonical representative."""
    D = reduced_disc(f1)
    if reduced_disc(f2) != D:
        raise ValueError("discriminants differ")
    if not (is_projective(f1) and is_projective(f2)):
        raise ValueError("composition is defined on projective forms")
    t1, t2 = form_to_triple(f1), form_to_triple(f2)
    t = Triple(t1.ring, t1.ideal * t2.ideal, t1.delta * t2.delta)
    t.check()
    return triple_form(t)


def is_reducible_triple(t: Triple) -> bool:
    """delta is a cube exactly when the attached form has a rational zero."""
    return rational_root(triple_to_form(t)) is not None


def endomorphism_ring(I: QuadIdeal) -> QuadRing:
    """Multiplier ring {x : xI in I}: Z + Z*(tau - m22)/g with g the content of the tau-action."""
    (m11, m12), (m21, m22) = I.tau_matrix()
    g = Fraction(0)
    for v in (m12, m21, m11 - m22):
        g = _frac_gcd(g, v)
    return ring_from_disc(int(I.D / (g * g)))


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    den = _lcm(a.denominator, b.denominator)
    return Fraction(gcd(int(a * den), int(b * den)), den)


def stabilizer_order_sl2(f: CubicForm) -> int:
    """3 when End(I) contains a primitive cube root of unity, else 1."""
    t = form_to_triple(f)
    return 3 if endomorphism_ring(t.ideal).D == -3 else 1
