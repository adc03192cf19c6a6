"""Binary cubic forms with integer coefficients.

Two coefficient conventions are supported. In the integer-matrix flavor
(a, b, c, d) stands for a*x^3 + 3b*x^2*y + 3c*x*y^2 + d*y^3, in the
classical flavor for a*x^3 + b*x^2*y + c*x*y^2 + d*y^3.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import gcd
from typing import Optional

INT128_MAX = (1 << 127) - 1


class Flavor(str, Enum):
    INTEGER_MATRIX = "integer_matrix"
    CLASSICAL = "classical"


class DegenerateFormError(ValueError):
    pass


def checked(value: int) -> int:
    """Raise instead of silently exceeding the signed 128-bit range."""
    if not -INT128_MAX - 1 <= value <= INT128_MAX:
        raise OverflowError(f"value {value} exceeds 128-bit range")
    return value


@dataclass(frozen=True, order=True)
class CubicForm:
    a: int
    b: int
    c: int
    d: int
    flavor: Flavor = Flavor.INTEGER_MATRIX

    @property
    def coeffs(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def expanded(self) -> tuple[int, int, int, int]:
        """Coefficients of x^3, x^2y, xy^2, y^3."""
        if self.flavor is Flavor.INTEGER_MATRIX:
            return (self.a, 3 * self.b, 3 * self.c, self.d)
        return self.coeffs

    def __call__(self, x, y):
        e0, e1, e2, e3 = self.expanded()
        return e0 * x**3 + e1 * x * x * y + e2 * x * y * y + e3 * y**3

    def __neg__(self) -> CubicForm:
        return CubicForm(-self.a, -self.b, -self.c, -self.d, self.flavor)

    def __repr__(self) -> str:
        tag = "" if self.flavor is Flavor.INTEGER_MATRIX else ", classical"
        return f"CubicForm({self.a}, {self.b}, {self.c}, {self.d}{tag})"


@dataclass(frozen=True)
class UnimodularMatrix:
    p: int
    q: int
    r: int
    s: int

    def __post_init__(self):
        if self.det not in (1, -1):
            raise ValueError(f"determinant {self.det} is not +-1")

    @property
    def det(self) -> int:
        return self.p * self.s - self.q * self.r

    def __matmul__(self, other: UnimodularMatrix) -> UnimodularMatrix:
        return UnimodularMatrix(
            self.p * other.p + self.q * other.r,
            self.p * other.q + self.q * other.s,
            self.r * other.p + self.s * other.r,
            self.r * other.q + self.s * other.s,
        )

    def inverse(self) -> UnimodularMatrix:
        e = self.det
        return UnimodularMatrix(e * self.s, -e * self.q, -e * self.r, e * self.p)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.p, self.q, self.r, self.s)


IDENTITY = UnimodularMatrix(1, 0, 0, 1)


@dataclass(frozen=True)
class QuadCovariant:
    A: int
    B: int
    C: int

    @property
    def disc(self) -> int:
        return self.B * self.B - 4 * self.A * self.C

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.A, self.B, self.C)


def _require_integer_matrix(f: CubicForm) -> None:
    if f.flavor is not Flavor.INTEGER_MATRIX:
        raise TypeError("operation defined for integer-matrix forms only")


def reduced_disc(f: CubicForm) -> int:
    """-Disc/27 of the expanded form; the discriminant of the attached quadratic ring."""
    _require_integer_matrix(f)
    a, b, c, d = f.coeffs
    return checked(
        -3 * b * b * c * c + 4 * a * c**3 + 4 * b**3 * d + a * a * d * d - 6 * a * b * c * d
    )


def classical_disc(f: CubicForm) -> int:
    """Discriminant of the expanded polynomial e0 x^3 + e1 x^2 y + e2 x y^2 + e3 y^3."""
    a, b, c, d = f.expanded()
    return checked(
        b * b * c * c - 4 * a * c**3 - 4 * b**3 * d - 27 * a * a * d * d + 18 * a * b * c * d
    )


def disc(f: CubicForm) -> int:
    """Flavor-appropriate discriminant: reduced for integer-matrix, classical otherwise."""
    if f.flavor is Flavor.INTEGER_MATRIX:
        return reduced_disc(f)
    return classical_disc(f)


def hessian(f: CubicForm) -> QuadCovariant:
    _require_integer_matrix(f)
    a, b, c, d = f.coeffs
    return QuadCovariant(checked(b * b - a * c), checked(a * d - b * c), checked(c * c - b * d))


def classical_hessian(f: CubicForm) -> QuadCovariant:
    """(b^2-3ac, bc-9ad, c^2-3bd) for a classical form; its discriminant is -3 Disc(f)."""
    a, b, c, d = f.expanded()
    return QuadCovariant(b * b - 3 * a * c, b * c - 9 * a * d, c * c - 3 * b * d)


def _substitute(e: tuple[int, int, int, int], g: UnimodularMatrix) -> list[int]:
    # expanded coefficients of f(px + ry, qx + sy)
    p, q, r, s = g.as_tuple()
    lin1 = (p, r)  # x' = p x + r y
    lin2 = (q, s)  # y' = q x + s y
    out = [0, 0, 0, 0]
    for k, coef in enumerate(e):
        if coef == 0:
            continue
        poly = [coef]
        for _ in range(3 - k):
            poly = _mul_linear(poly, lin1)
        for _ in range(k):
            poly = _mul_linear(poly, lin2)
        for i, v in enumerate(poly):
            out[i] += v
    return out


def _mul_linear(poly: list[int], lin: tuple[int, int]) -> list[int]:
    # poly in descending powers of x; multiply by (u x + v y)
    u, v = lin
    out = [0] * (len(poly) + 1)
    for i, c in enumerate(poly):
        out[i] += c * u
        out[i + 1] += c * v
    return out


def act(g: UnimodularMatrix, f: CubicForm) -> CubicForm:
    """Twisted action f((x, y) g) / det(g)."""
    e0, e1, e2, e3 = _substitute(f.expanded(), g)
    sign = g.det
    if f.flavor is Flavor.INTEGER_MATRIX:
        return CubicForm(
            checked(sign * e0), checked(sign * e1 // 3), checked(sign * e2 // 3), checked(sign * e3)
        )
    return CubicForm(sign * e0, sign * e1, sign * e2, sign * e3, Flavor.CLASSICAL)


def act_quadratic(g: UnimodularMatrix, q: QuadCovariant) -> QuadCovariant:
    """Linear substitution Q((x, y) g)."""
    p, qq, r, s = g.as_tuple()
    A, B, C = q.as_tuple()
    return QuadCovariant(
        A * p * p + B * p * qq + C * qq * qq,
        2 * A * p * r + B * (p * s + qq * r) + 2 * C * qq * s,
        A * r * r + B * r * s + C * s * s,
    )


def require_nondegenerate(f: CubicForm) -> None:
    if disc(f) == 0:
        raise DegenerateFormError(f"{f} has zero discriminant")


def is_projective(f: CubicForm) -> bool:
    """The Hessian covariant is primitive."""
    require_nondegenerate(f)
    A, B, C = hessian(f).as_tuple()
    return gcd(gcd(A, B), C) == 1


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i * i != n:
                large.append(n // i)
        i += 1
    return small + large[::-1]


def _canonical_pair(x: int, y: int) -> tuple[int, int]:
    g = gcd(x, y)
    x, y = x // g, y // g
    if y < 0 or (y == 0 and x < 0):
        x, y = -x, -y
    return (x, y)


def rational_roots(f: CubicForm) -> list[tuple[int, int]]:
    """All primitive projective roots (x0, y0), normalized so y0 >= 0 and x0 > 0 when y0 = 0."""
    require_nondegenerate(f)
    e0, e1, e2, e3 = f.expanded()
    roots = set()
    if e0 == 0:
        roots.add((1, 0))
    if e3 == 0:
        roots.add((0, 1))
    if e0 != 0 and e3 != 0:
        # x0 | e3 and y0 | e0 for a root x0/y0 of e0 s^3 + e1 s^2 + e2 s + e3
        for y0 in _divisors(e0):
            for x0 in _divisors(e3):
                for sx in (x0, -x0):
                    if gcd(sx, y0) == 1 and f(sx, y0) == 0:
                        roots.add((sx, y0))
    elif e0 == 0 and e3 != 0:
        # remaining roots solve e1 s^2 + e2 s + e3 with s = x/y
        roots.update(_quadratic_roots(e1, e2, e3))
    elif e3 == 0 and e0 != 0:
        roots.update(_canonical_pair(y, x) for x, y in _quadratic_roots(e2, e1, e0))
    else:
        roots.update(_quadratic_roots(e1, e2, 0))
    return sorted(roots, key=lambda r: (r[1], r[0]))


def _quadratic_roots(u: int, v: int, w: int) -> set[tuple[int, int]]:
    # rational roots s = x/y of u s^2 + v s + w
    out = set()
    if u == 0:
        if v != 0:
            out.add(_canonical_pair(-w, v))
        return out
    dq = v * v - 4 * u * w
    if dq < 0:
        return out
    r = _isqrt_exact(dq)
    if r is None:
        return out
    for sgn in (1, -1):
        s = Fraction(-v + sgn * r, 2 * u)
        out.add(_canonical_pair(s.numerator, s.denominator))
    return out


def _isqrt_exact(n: int) -> Optional[int]:
    from math import isqrt

    r = isqrt(n)
    return r if r * r == n else None


def rational_root(f: CubicForm) -> Optional[tuple[int, int]]:
    """A canonical primitive root of f, or None when f is irreducible over Q."""
    roots = rational_roots(f)
    return roots[0] if roots else None


def is_reducible(f: CubicForm) -> bool:
    return rational_root(f) is not None
