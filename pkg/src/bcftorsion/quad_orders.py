"""Quadratic orders by discriminant, binary quadratic forms, and the two
3-torsion oracles: class groups via composition of forms and ideal groups
via finite quotient rings."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt
from typing import Iterator

import numpy as np
from sympy import factorint


class InvalidDiscriminantError(ValueError):
    pass


@dataclass(frozen=True)
class QuadRing:
    D: int
    D0: int
    f: int
    eps: int

    @property
    def is_maximal(self) -> bool:
        return self.f == 1


def is_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


def validate_disc(D: int, allow_square: bool = True) -> None:
    if D == 0 or D % 4 not in (0, 1):
        raise InvalidDiscriminantError(f"{D} is not a quadratic discriminant")
    if not allow_square and is_square(D):
        raise InvalidDiscriminantError(f"{D} is a perfect square")


@lru_cache(maxsize=1 << 16)
def ring_from_disc(D: int) -> QuadRing:
    validate_disc(D)
    if is_square(D):
        # Z x Z and its suborders: the fundamental discriminant is 1
        return QuadRing(D, 1, isqrt(D), D % 4)
    core, s = (-1 if D < 0 else 1), 1
    for p, e in factorint(abs(D)).items():
        core *= p ** (e % 2)
        s *= p ** (e // 2)
    if core % 4 == 1:
        D0, f = core, s
    else:
        D0, f = 4 * core, s // 2
    return QuadRing(D, D0, f, D % 4)


def is_fundamental(D: int) -> bool:
    return ring_from_disc(D).f == 1


def is_maximal_disc(D: int) -> bool:
    """Odd part squarefree and D mod 16 in {1, 5, 8, 9, 12, 13}."""
    validate_disc(D)
    if D % 16 not in (1, 5, 8, 9, 12, 13):
        return False
    odd = abs(D)
    while odd % 2 == 0:
        odd //= 2
    return all(e == 1 for e in factorint(odd).values())


def u3_correction(D: int) -> int:
    """3 for non-maximal orders in Q(sqrt(-3)), where zeta_3 is missing; 1 otherwise."""
    R = ring_from_disc(D)
    return 3 if R.D0 == -3 and R.f > 1 else 1


def unit_cube_index(D: int) -> int:
    """|U+(O) / U+(O)^3|."""
    validate_disc(D, allow_square=False)
    return 1 if D < -3 else 3


def sigma_factor(D: int) -> int:
    """Ratio |H(O)| / |Cl_3(O)|."""
    validate_disc(D, allow_square=False)
    return 1 if D < -3 else 3


# -- binary quadratic forms ------------------------------------------------


@dataclass(frozen=True)
class BQF:
    A: int
    B: int
    C: int

    @property
    def disc(self) -> int:
        return self.B * self.B - 4 * self.A * self.C

    def is_primitive(self) -> bool:
        return gcd(gcd(self.A, self.B), self.C) == 1

    def inverse(self) -> BQF:
        return BQF(self.A, -self.B, self.C)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.A, self.B, self.C)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    # returns (g, u, v) with u*a + v*b = g >= 0
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def compose_bqf(f1: BQF, f2: BQF) -> BQF:
    """Dirichlet composition of primitive forms of equal discriminant (not reduced)."""
    D = f1.disc
    if f2.disc != D:
        raise ValueError("discriminants differ")
    a1, b1, _ = f1.as_tuple()
    a2, b2, c2 = f2.as_tuple()
    if abs(a1) > abs(a2):
        a1, b1, _, a2, b2, c2 = a2, b2, c2, a1, b1, f1.C
    s = (b1 + b2) // 2
    n = b2 - s
    d, y1, _ = _xgcd(a2, a1)
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, x2, y2 = _xgcd(s, d)
        y2 = -y2
    v1, v2 = a1 // d1, a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    c3 = (b3 * b3 - D) // (4 * a3)
    return BQF(a3, b3, c3)


def reduce_definite(f: BQF) -> BQF:
    """Unique reduced form: -A < B <= A < C or 0 <= B <= A = C (positive definite input)."""
    A, B, C = f.as_tuple()
    if A <= 0 or f.disc >= 0:
        raise ValueError("positive definite form required")
    while True:
        if not -A < B <= A:
            n = (A - B) // (2 * A)
            B, C = B + 2 * A * n, A * n * n + B * n + C
        if A > C:
            A, B, C = C, -B, A
            continue
        if A == C and B < 0:
            B = -B
        return BQF(A, B, C)


def _indefinite_normal_b(b: int, a: int, D: int, s: int) -> int:
    # b' = b mod 2a, placed in (sqrt D - 2|a|, sqrt D) when |a| < sqrt D, else in (-|a|, |a|]
    m = 2 * abs(a)
    if a * a < D:
        return s - ((s - b) % m)
    r = b % m
    return r - m if r > abs(a) else r


def is_reduced_indefinite(f: BQF) -> bool:
    A, B, C = f.as_tuple()
    D = f.disc
    if B <= 0 or B * B >= D:
        return False
    t = 2 * abs(A) - B
    return (t <= 0 or t * t < D) and D < (B + 2 * abs(A)) ** 2


def rho(f: BQF) -> BQF:
    """One step of the indefinite reduction operator."""
    D = f.disc
    s = isqrt(D)
    c = f.C
    b2 = _indefinite_normal_b(-f.B, c, D, s)
    return BQF(c, b2, (b2 * b2 - D) // (4 * c))


def reduce_indefinite(f: BQF) -> BQF:
    D = f.disc
    if D <= 0 or is_square(D):
        raise ValueError("indefinite form of non-square discriminant required")
    s = isqrt(D)
    A, B = f.A, f.B
    B = _indefinite_normal_b(B, A, D, s)
    g = BQF(A, B, (B * B - D) // (4 * A))
    while not is_reduced_indefinite(g):
        g = rho(g)
    return g


def reduced_forms(D: int, primitive: bool = True) -> list[BQF]:
    """Reduced forms of discriminant D (one per class when D < 0, all cycle members when D > 0)."""
    validate_disc(D, allow_square=False)
    out = []
    if D < 0:
        a = 1
        while 3 * a * a <= -D:
            for b in range(-a + 1, a + 1):
                if (b - D) % 2:
                    continue
                num = b * b - D
                if num % (4 * a):
                    continue
                c = num // (4 * a)
                if c < a or (c == a and b < 0):
                    continue
                f = BQF(a, b, c)
                if not primitive or f.is_primitive():
                    out.append(f)
            a += 1
        return out
    s = isqrt(D)
    for b in range(1, s + 1):
        if (b - D) % 2 or b * b >= D:
            continue
        N = (D - b * b) // 4
        for a in _divisors(N):
            for sa in (a, -a):
                f = BQF(sa, b, -N // sa)
                if is_reduced_indefinite(f) and (not primitive or f.is_primitive()):
                    out.append(f)
    return out


def _divisors(n: int) -> list[int]:
    out = []
    i = 1
    while i * i <= n:
        if n % i == 0:
            out.append(i)
            if i * i != n:
                out.append(n // i)
        i += 1
    return out


def principal_form(D: int) -> BQF:
    validate_disc(D, allow_square=False)
    eps = D % 2
    if D < 0:
        return BQF(1, eps, (eps - D) // 4)
    s = isqrt(D)
    b = s if (s - D) % 2 == 0 else s - 1
    return BQF(1, b, (b * b - D) // 4)


class FormClassGroup:
    """Class group of primitive forms of a fixed non-square discriminant.

    Classes are indexed by canonical reduced forms; for positive discriminants
    each class is a cycle of reduced forms under rho (the narrow class group).
    """

    def __init__(self, D: int):
        validate_disc(D, allow_square=False)
        self.D = D
        forms = reduced_forms(D)
        if D < 0:
            self.classes = forms
            self._index = {f: i for i, f in enumerate(forms)}
        else:
            self._index = {}
            self.classes = []
            for f in forms:
                if f in self._index:
                    continue
                k = len(self.classes)
                g = f
                cycle = []
                while g not in self._index:
                    self._index[g] = k
                    cycle.append(g)
                    g = rho(g)
                self.classes.append(min(cycle, key=lambda h: (abs(h.A), h.A, h.B)))
        self.identity = self.canonical(principal_form(D))

    def __len__(self) -> int:
        return len(self.classes)

    def canonical(self, f: BQF) -> BQF:
        if self.D < 0:
            return reduce_definite(f)
        return self.classes[self._index[reduce_indefinite(f)]]

    def mul(self, f: BQF, g: BQF) -> BQF:
        return self.canonical(compose_bqf(f, g))

    def inv(self, f: BQF) -> BQF:
        return self.canonical(f.inverse())

    def power(self, f: BQF, k: int) -> BQF:
        result, base = self.identity, f
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def three_torsion(self) -> list[BQF]:
        return [f for f in self.classes if self.power(f, 3) == self.identity]


def class_number(D: int) -> int:
    return len(FormClassGroup(D))


def cl3_count(D: int) -> int:
    """Number of 3-torsion classes in the (narrow) class group of the order of discriminant D."""
    validate_disc(D, allow_square=False)
    return len(FormClassGroup(D).three_torsion())


# -- ideal group oracle ----------------------------------------------------


def _local_three_torsion(q: int, eps0: int, n0: int) -> int:
    # 3-torsion of (O_k/q)^x / (Z/q)^x where O_k = Z[w], w^2 = eps0*w + n0
    x, y = np.meshgrid(np.arange(q, dtype=np.int64), np.arange(q, dtype=np.int64), indexing="ij")
    x, y = x.ravel(), y.ravel()
    norm = (x * x + eps0 * x * y - n0 * y * y) % q
    units = np.gcd(norm, q) == 1
    x, y = x[units], y[units]
    # square then cube, coordinates reduced mod q
    x2 = (x * x + n0 * y * y) % q
    y2 = (2 * x * y + eps0 * y * y) % q
    y3 = (x2 * y + y2 * x + eps0 * y2 * y) % q
    hits = int(np.count_nonzero(y3 == 0))
    image = sum(1 for u in range(q) if gcd(u, q) == 1)
    return hits // image


@lru_cache(maxsize=None)
def _local_factor(q: int, eps0: int, n0_mod_q: int) -> int:
    return _local_three_torsion(q, eps0, n0_mod_q)


def ideal3_count_direct(D: int) -> int:
    """|I_3(O)| by enumerating (O_k / f O_k)^x in one piece."""
    validate_disc(D, allow_square=False)
    R = ring_from_disc(D)
    if R.f == 1:
        return 1
    eps0 = R.D0 % 4
    return _local_three_torsion(R.f, eps0, ((R.D0 - eps0) // 4) % R.f)


def ideal3_count(D: int) -> int:
    """|I_3(O)|: 3-torsion of (O_k/fO_k)^x modulo the image of (Z/fZ)^x.

    The finite group splits over the prime powers of the conductor; each
    local factor is computed by enumeration and memoized on the residue data
    that determines the local quotient ring.
    """
    validate_disc(D, allow_square=False)
    R = ring_from_disc(D)
    if R.f == 1:
        return 1
    eps0 = R.D0 % 4
    n0 = (R.D0 - eps0) // 4
    total = 1
    for p, e in factorint(R.f).items():
        q = p**e
        total *= _local_factor(q, eps0, n0 % q)
    return total


def discriminants(X: int, sign: int, include_squares: bool = False) -> Iterator[int]:
    """Valid discriminants D with 0 < sign*D < X, in increasing |D|."""
    for m in range(1, X):
        D = sign * m
        if D % 4 in (0, 1) and (include_squares or not is_square(D)):
            yield D


@lru_cache(maxsize=8)
def _disc_masks(X: int, sign: int) -> dict:
    m = np.arange(X, dtype=np.int64)
    D = sign * m
    valid = np.isin(D % 4, (0, 1))
    valid[0] = False
    square = np.zeros(X, dtype=bool)
    if sign > 0:
        r = np.arange(1, isqrt(max(X - 1, 0)) + 1)
        square[r * r] = True
    # odd part squarefree: no odd p^2 divides m
    odd_sqfree = np.ones(X, dtype=bool)
    sieve = np.ones(isqrt(max(X, 4)) + 2, dtype=bool)
    sieve[:2] = False
    for p in range(2, len(sieve)):
        if sieve[p]:
            sieve[p * p :: p] = False
            if p > 2:
                odd_sqfree[:: p * p] = False
    maximal = valid & np.isin(D % 16, (1, 5, 8, 9, 12, 13)) & odd_sqfree
    for arr in (valid, square, maximal):
        arr.setflags(write=False)
    return {"valid": valid, "square": square, "maximal": maximal}


def disc_masks(X: int, sign: int) -> dict:
    """Boolean arrays indexed by m = |D| for D = sign*m, 0 <= m < X: valid, square, maximal."""
    return _disc_masks(X, sign)


# -- whole-range tables ----------------------------------------------------


@lru_cache(maxsize=2)
def smallest_prime_factor(N: int) -> np.ndarray:
    spf = np.zeros(max(N, 2), dtype=np.int64)
    for p in range(2, isqrt(N - 1) + 1 if N > 1 else 2):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.nonzero(spf == 0)[0]
    spf[idx] = idx
    return spf


def _factor_with(n: int, spf: np.ndarray) -> dict:
    out = {}
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out[p] = e
    return out


def _fundamental_split(D: int, spf: np.ndarray) -> tuple[int, int]:
    core, s = (-1 if D < 0 else 1), 1
    for p, e in _factor_with(abs(D), spf).items():
        core *= p ** (e % 2)
        s *= p ** (e // 2)
    if core % 4 == 1:
        return core, s
    return 4 * core, s // 2


def ideal3_table(X: int, sign: int) -> np.ndarray:
    """ideal3_count(sign*m) for 0 < m < X (0 where sign*m is not a non-square discriminant)."""
    out = np.zeros(X, dtype=np.int64)
    spf = smallest_prime_factor(X)
    masks = disc_masks(X, sign)
    for m in np.nonzero(masks["valid"] & ~masks["square"])[0]:
        D = sign * int(m)
        D0, f = _fundamental_split(D, spf)
        total = 1
        if f > 1:
            eps0 = D0 % 4
            n0 = (D0 - eps0) // 4
            for p, e in _factor_with(f, spf).items():
                q = p**e
                total *= _local_factor(q, eps0, n0 % q)
        out[m] = total
    return out


def cl3_table(X: int, sign: int, block: int = 1 << 14) -> np.ndarray:
    """cl3_count(sign*m) for 0 < m < X via the compiled class-group sweeps."""
    from . import _kernels

    out = np.zeros(X, dtype=np.int64)
    if sign < 0:
        _kernels.neg_cl3_kernel(X, out)
    else:
        for lo in range(2, X, block):
            _kernels.pos_cl3_kernel(lo, min(X, lo + block), out)
    masks = disc_masks(X, sign)
    out[~(masks["valid"] & ~masks["square"])] = 0
    return out
