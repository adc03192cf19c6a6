"""Local densities, quadratic rings over Z_p, etale cubic algebras over Q_p,
and the cubic mass of a family of quadratic orders.

Quadratic rings over Z_p are indexed by an algebra label and a conductor
exponent j.  Labels are "split", "inert" and "ramified(k)"; the ramified
algebras are numbered as follows.

* odd p: k = 1 for Q_p(sqrt(p u)) with u a square unit, k = 2 otherwise
  (so at p = 3, k = 1 is sqrt(3) and k = 2 is sqrt(-3));
* p = 2: k = 1, 2 are sqrt(-1), sqrt(3) (disc exponent 2) and k = 3..6 are
  sqrt(2), sqrt(-2), sqrt(6), sqrt(-6) (disc exponent 3).
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import pi
from typing import Iterable, Mapping, Optional, Union

import numpy as np
from sympy import isprime, legendre_symbol, primerange

__all__ = [
    "SPLIT",
    "INERT",
    "ramified",
    "LocalRingSpec",
    "LocalCubicAlgebra",
    "FamilySpec",
    "FamilyError",
    "MassValue",
    "mu_projective",
    "mu_maximal",
    "projective_density_bruteforce",
    "maximal_density_bruteforce",
    "quadratic_algebras",
    "disc_exponent",
    "local_algebra_of",
    "local_cubic_table",
    "check_table",
    "C_of_R",
    "C_eq_of_R",
    "mass_factor",
    "mass",
    "order_density_factor",
    "order_density",
    "lemma26_factor",
    "unit_cube_ratio",
]

SPLIT = "split"
INERT = "inert"


def ramified(k: int) -> str:
    return f"ramified({k})"


_RAM = re.compile(r"^ram(?:ified)?\(?(\d)\)?$")


def _norm_algebra(label: str) -> str:
    label = label.strip().lower()
    if label in (SPLIT, INERT):
        return label
    m = _RAM.match(label)
    if not m:
        raise ValueError(f"unknown quadratic algebra label {label!r}")
    return ramified(int(m.group(1)))


def quadratic_algebras(p: int) -> list[str]:
    n = 6 if p == 2 else 2
    return [SPLIT, INERT] + [ramified(k) for k in range(1, n + 1)]


def disc_exponent(p: int, algebra: str) -> int:
    algebra = _norm_algebra(algebra)
    if algebra in (SPLIT, INERT):
        return 0
    k = int(_RAM.match(algebra).group(1))
    if p != 2:
        if k not in (1, 2):
            raise ValueError(f"no ramified algebra {k} at p = {p}")
        return 1
    if not 1 <= k <= 6:
        raise ValueError(f"no ramified algebra {k} at p = 2")
    return 2 if k <= 2 else 3


def local_algebra_of(D0: int, p: int) -> str:
    """Algebra label of Q(sqrt(D0)) tensored with Q_p, for a fundamental D0."""
    if p == 2:
        if D0 % 2:
            return SPLIT if D0 % 8 == 1 else INERT
        if D0 % 8 == 4:
            return ramified(1) if (D0 // 4) % 8 == 7 else ramified(2)
        return ramified({1: 3, 7: 4, 3: 5, 5: 6}[(D0 // 8) % 8])
    if D0 % p:
        return SPLIT if legendre_symbol(D0 % p, p) == 1 else INERT
    u = (D0 // p) % p
    return ramified(1) if legendre_symbol(u, p) == 1 else ramified(2)


@dataclass(frozen=True)
class LocalRingSpec:
    p: int
    algebra: str
    j: int = 0

    def __post_init__(self):
        object.__setattr__(self, "algebra", _norm_algebra(self.algebra))
        if self.j < 0:
            raise ValueError("conductor exponent must be non-negative")
        disc_exponent(self.p, self.algebra)

    @property
    def d0(self) -> int:
        return disc_exponent(self.p, self.algebra)

    @property
    def disc_exp(self) -> int:
        return 2 * self.j + self.d0

    @property
    def is_maximal(self) -> bool:
        return self.j == 0


@dataclass(frozen=True)
class LocalCubicAlgebra:
    p: int
    label: str
    disc_exp: int
    resolvent: str
    aut: int

    @property
    def resolvent_ring(self) -> LocalRingSpec:
        d0 = disc_exponent(self.p, self.resolvent)
        return LocalRingSpec(self.p, self.resolvent, (self.disc_exp - d0) // 2)

    @property
    def totally_ramified(self) -> bool:
        return self.label.startswith("totally ramified")


# -- p-adic densities of form conditions --------------------------------------


def mu_projective(p: int) -> Fraction:
    return 1 - Fraction(1, p * p)


def mu_maximal(p: int) -> Fraction:
    return Fraction((p * p - 1) ** 2, p**4)


def _grid(n: int):
    r = np.arange(n, dtype=np.int64)
    return np.meshgrid(r, r, r, r, indexing="ij", sparse=True)


def projective_density_bruteforce(p: int) -> Fraction:
    """Fraction of (a,b,c,d) mod p whose Hessian is not identically 0 mod p."""
    a, b, c, d = _grid(p)
    bad = ((b * b - a * c) % p == 0) & ((a * d - b * c) % p == 0) & ((c * c - b * d) % p == 0)
    return 1 - Fraction(int(bad.sum()), p**4)


def maximal_density_bruteforce(p: int) -> Fraction:
    """Fraction of forms whose reduced discriminant is maximal at p.

    Counted mod 16 at p = 2 (residues 1, 5, 8, 9, 12, 13) and mod p^2 at odd p.
    """
    n = 16 if p == 2 else p * p
    a, b, c, d = _grid(n)
    disc = (-3 * b * b * c * c + 4 * a * c**3 + 4 * b**3 * d + a * a * d * d - 6 * a * b * c * d) % n
    if p == 2:
        good = np.isin(disc, (1, 5, 8, 9, 12, 13))
    else:
        good = disc != 0
    return Fraction(int(good.sum()), n**4)


# -- etale cubic algebras over Q_p ---------------------------------------------

# Totally ramified cubic extensions of Q_3 as (disc exponent, resolvent, aut, count).
_WILD_3 = (
    (3, ramified(1), 1, 1),
    (3, ramified(2), 1, 1),
    (4, SPLIT, 3, 3),
    (4, INERT, 1, 1),
    (5, ramified(2), 1, 3),
)


def _build_table(p: int) -> tuple[LocalCubicAlgebra, ...]:
    rows = [
        LocalCubicAlgebra(p, "Q_p^3", 0, SPLIT, 6),
        LocalCubicAlgebra(p, "Q_p x Q_p2", 0, INERT, 2),
        LocalCubicAlgebra(p, "Q_p3", 0, SPLIT, 3),
    ]
    for alg in quadratic_algebras(p)[2:]:
        rows.append(LocalCubicAlgebra(p, f"Q_p x {alg}", disc_exponent(p, alg), alg, 2))
    if p == 3:
        for c, res, aut, count in _WILD_3:
            for i in range(count):
                rows.append(LocalCubicAlgebra(p, f"totally ramified c={c} {res} #{i + 1}", c, res, aut))
    elif p % 3 == 1:
        for i in range(3):
            rows.append(LocalCubicAlgebra(p, f"totally ramified Galois #{i + 1}", 2, SPLIT, 3))
    else:
        rows.append(LocalCubicAlgebra(p, "totally ramified non-Galois", 2, INERT, 1))
    return tuple(rows)


def check_table(p: int, table: Iterable[LocalCubicAlgebra]) -> None:
    """Raise if the table fails the mass and resolvent consistency checks."""
    table = list(table)
    total = [K for K in table if K.totally_ramified]
    if sum(Fraction(1, K.aut) * Fraction(1, p ** (K.disc_exp - 2)) for K in total) != 1:
        raise AssertionError(f"totally ramified mass at p = {p} is not 1")
    if p != 3:
        expected = 3 if p % 3 == 1 else 1
        if len(total) != expected or any(K.disc_exp != 2 for K in total):
            raise AssertionError(f"tame totally ramified count at p = {p} is wrong")
    for K in table:
        if (K.disc_exp - disc_exponent(p, K.resolvent)) % 2:
            raise AssertionError(f"{K.label}: disc exponent has the wrong parity for its resolvent")
    for alg in quadratic_algebras(p):
        if _C(p, alg, 0) != Fraction(1, 2):
            raise AssertionError(f"C of the maximal {alg} ring at p = {p} is not 1/2")


@lru_cache(maxsize=None)
def local_cubic_table(p: int) -> tuple[LocalCubicAlgebra, ...]:
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    table = _build_table(p)
    check_table(p, table)
    num, den = _sums(p, "all")
    if num / (den / 2) != Fraction(p**3 - 1, p * (p * p - 1)):
        raise AssertionError(f"the all-orders mass factor at p = {p} disagrees with the Euler factor")
    return table


def _resolvent_js(p: int, algebra: str) -> list[tuple[int, int]]:
    """(j, aut) for table entries whose resolvent lies in the given algebra."""
    return [
        (K.resolvent_ring.j, K.aut)
        for K in _build_table(p)
        if K.resolvent == algebra
    ]


def _C(p: int, algebra: str, j: int, exact: bool = False) -> Fraction:
    return sum(
        (Fraction(1, aut) for jk, aut in _resolvent_js(p, algebra) if (jk == j if exact else jk <= j)),
        Fraction(0),
    )


def C_of_R(R: LocalRingSpec) -> Fraction:
    """Weighted count of cubic algebras whose resolvent ring contains R."""
    local_cubic_table(R.p)
    return _C(R.p, R.algebra, R.j)


def C_eq_of_R(R: LocalRingSpec) -> Fraction:
    """Weighted count of cubic algebras whose resolvent ring equals R."""
    local_cubic_table(R.p)
    return _C(R.p, R.algebra, R.j, exact=True)


# -- families ---------------------------------------------------------------------


class FamilyError(ValueError):
    pass


Condition = Union[str, frozenset]


@dataclass(frozen=True)
class FamilySpec:
    """Local conditions at finitely many primes plus a default ("maximal" or "all").

    A condition is "all", "maximal", ("rings", frozenset of (algebra, j)) or
    ("conductor_exponents", frozenset of j).
    """

    conditions: tuple = ()
    default: str = "maximal"
    name: Optional[str] = None

    def __post_init__(self):
        if self.default not in ("maximal", "all"):
            raise FamilyError("the default condition must be 'maximal' or 'all'")
        seen = set()
        for p, cond in self.conditions:
            if not isprime(p):
                raise FamilyError(f"condition key {p} is not prime")
            if p in seen:
                raise FamilyError(f"duplicate condition at p = {p}")
            seen.add(p)
            _validate_condition(p, cond)

    @classmethod
    def all_orders(cls) -> "FamilySpec":
        return cls((), "all", "all")

    @classmethod
    def maximal(cls) -> "FamilySpec":
        return cls((), "maximal", "maximal")

    @classmethod
    def from_dict(cls, data: Mapping) -> "FamilySpec":
        data = dict(data)
        default = data.pop("default", "maximal")
        name = data.pop("name", None)
        conds = []
        for key, value in data.items():
            try:
                p = int(key)
            except (TypeError, ValueError):
                raise FamilyError(f"condition key {key!r} is not a prime") from None
            conds.append((p, _parse_condition(value)))
        return cls(tuple(sorted(conds)), default, name)

    @classmethod
    def from_json(cls, text: str) -> "FamilySpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "FamilySpec":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def to_dict(self) -> dict:
        out: dict = {"default": self.default}
        for p, cond in self.conditions:
            if isinstance(cond, str):
                out[str(p)] = cond
            elif cond[0] == "rings":
                out[str(p)] = {"rings": sorted([a, j] for a, j in cond[1])}
            else:
                out[str(p)] = {"conductor_exponents": sorted(cond[1])}
        return out

    @property
    def id(self) -> str:
        if self.name:
            return self.name
        if not self.conditions:
            return self.default
        return "family-" + self.hash[:10]

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def condition(self, p: int) -> Condition:
        for q, cond in self.conditions:
            if q == p:
                return cond
        return self.default

    @property
    def explicit_primes(self) -> list[int]:
        return [p for p, _ in self.conditions]

    def contains_ring(self, R: LocalRingSpec) -> bool:
        return _cond_contains(self.condition(R.p), R)

    def is_acceptable(self) -> bool:
        # every prime outside the finite explicit set carries "maximal" or "all"
        return self.default in ("maximal", "all")


def _parse_condition(value) -> Condition:
    if isinstance(value, str):
        value = value.strip().lower()
        if value not in ("all", "maximal"):
            raise FamilyError(f"unknown condition {value!r}")
        return value
    if isinstance(value, Mapping) and len(value) == 1:
        ((key, items),) = value.items()
        if key == "rings":
            try:
                rings = frozenset((_norm_algebra(str(a)), int(j)) for a, j in items)
            except (TypeError, ValueError) as exc:
                raise FamilyError(f"bad ring list: {exc}") from None
            return ("rings", rings)
        if key == "conductor_exponents":
            return ("conductor_exponents", frozenset(int(j) for j in items))
    raise FamilyError(f"unrecognised condition {value!r}")


def _validate_condition(p: int, cond: Condition) -> None:
    if isinstance(cond, str):
        if cond not in ("all", "maximal"):
            raise FamilyError(f"unknown condition {cond!r}")
        return
    kind, items = cond
    if not items:
        raise FamilyError(f"empty condition at p = {p}")
    if kind == "rings":
        for alg, j in items:
            try:
                LocalRingSpec(p, alg, j)
            except ValueError as exc:
                raise FamilyError(str(exc)) from None
    elif kind == "conductor_exponents":
        if any(j < 0 for j in items):
            raise FamilyError("conductor exponents must be non-negative")
    else:
        raise FamilyError(f"unknown condition kind {kind!r}")


def _cond_contains(cond: Condition, R: LocalRingSpec) -> bool:
    if cond == "all":
        return True
    if cond == "maximal":
        return R.j == 0
    kind, items = cond
    if kind == "rings":
        return (R.algebra, R.j) in items
    return R.j in items


def _cond_rings(p: int, cond: Condition):
    """Finite list of rings, or None when the condition is "all"."""
    if cond == "all":
        return None
    if cond == "maximal":
        return [LocalRingSpec(p, a, 0) for a in quadratic_algebras(p)]
    kind, items = cond
    if kind == "rings":
        return sorted((LocalRingSpec(p, a, j) for a, j in items), key=lambda R: (R.algebra, R.j))
    return [LocalRingSpec(p, a, j) for a in quadratic_algebras(p) for j in sorted(items)]


def _sums(p: int, cond: Condition) -> tuple[Fraction, Fraction]:
    """(sum C(R)/Disc_p(R), sum 1/Disc_p(R)) over the rings allowed by cond."""
    rings = _cond_rings(p, cond)
    num = den = Fraction(0)
    if rings is not None:
        for R in rings:
            w = Fraction(1, p**R.disc_exp)
            num += C_of_R(R) * w
            den += w
        return num, den
    q = Fraction(1, p * p)
    for alg in quadratic_algebras(p):
        w0 = Fraction(1, p ** disc_exponent(p, alg))
        # C(R_j) is constant once j passes every resolvent exponent in the algebra
        J = max([jk for jk, _ in _resolvent_js(p, alg)] + [0])
        head = sum((_C(p, alg, j) * q**j for j in range(J)), Fraction(0))
        num += w0 * (head + _C(p, alg, J) * q**J / (1 - q))
        den += w0 / (1 - q)
    return num, den


def mass_factor(p: int, cond: Condition = "all") -> Fraction:
    if isinstance(cond, str):
        cond = _parse_condition(cond)
    _validate_condition(p, cond)
    num, den = _sums(p, cond)
    if den == 0:
        raise FamilyError(f"empty condition at p = {p}")
    return num / (den / 2)


@dataclass(frozen=True)
class MassValue:
    """A rational enclosure [lower, upper]; exact when both ends agree."""

    lower: Fraction
    upper: Fraction
    cutoff: int = 0

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> Fraction:
        return self.lower if self.exact else (self.lower + self.upper) / 2

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper

    def __float__(self) -> float:
        return float(self.value)


def mass(family: FamilySpec, primes_cutoff: int = 1000) -> MassValue:
    """Cubic mass of the family.

    Under an "all" default the factors for p > cutoff multiply to a number in
    [1, (N)/(N-1)] with N = cutoff + 1, since each is 1 + 1/(p(p+1)) and
    1 + 1/(n(n+1)) < n^2/(n^2-1) telescopes.
    """
    if not family.is_acceptable():
        raise FamilyError("family is not acceptable")
    cutoff = max([primes_cutoff] + family.explicit_primes)
    total = Fraction(1)
    for p in family.explicit_primes:
        total *= mass_factor(p, family.condition(p))
    if family.default == "maximal":
        return MassValue(total, total, cutoff)
    explicit = set(family.explicit_primes)
    for p in primerange(2, cutoff + 1):
        if p not in explicit:
            total *= Fraction(p**3 - 1, p * (p * p - 1))
    N = cutoff + 1
    return MassValue(total, total * Fraction(N, N - 1), cutoff)


def order_density_factor(p: int, cond: Condition) -> Fraction:
    """Local factor (p-1)/p * sum 1/(2 Disc_p(R)) counting quadratic orders."""
    if isinstance(cond, str):
        cond = _parse_condition(cond)
    _, den = _sums(p, cond)
    return Fraction(p - 1, p) * den / 2


def order_density(family: FamilySpec) -> float:
    """Limit of #{orders in the family with 0 < +-D < X} / X (same for both signs)."""
    if family.default == "all":
        out = 0.5
        for p in family.explicit_primes:
            out *= float(order_density_factor(p, family.condition(p)))
        return out
    out = 0.5 * 6 / pi**2
    for p in family.explicit_primes:
        out *= float(order_density_factor(p, family.condition(p)) / (1 - Fraction(1, p * p)))
    return out


def lemma26_factor(p: int) -> int:
    """|U+(R)/U+(R)^3| / |U_3+(R)| for quadratic rings R over Z_p."""
    return 3 if p == 3 else 1


unit_cube_ratio = lemma26_factor

# the wild table at 3 and the dyadic table are data; lint them on import
for _p in (2, 3):
    local_cubic_table(_p)
