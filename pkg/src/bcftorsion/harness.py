"""Family-aware statistics over discriminant ranges, the per-discriminant
identity suite, a resumable on-disk cache, and report writers."""

from __future__ import annotations

import csv
import io
import json
import os
from collections import OrderedDict
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from math import isqrt
from typing import Iterable, Optional

import numpy as np
from sympy import factorint, legendre_symbol

from . import __version__
from . import _kernels as K
from .enumeration import _cached_scan, census_table, proj_reducible_per_disc
from .local_mass import (
    FamilySpec,
    LocalRingSpec,
    local_algebra_of,
    mass,
    order_density,
    quadratic_algebras,
)
from .quad_orders import (
    cl3_count,
    cl3_table,
    disc_masks,
    ideal3_count,
    ideal3_table,
    ring_from_disc,
    sigma_factor,
    u3_correction,
    validate_disc,
)

SCHEMA_VERSION = 1
MAX_FACTOR_DISC = 1 << 60


# -- family membership ----------------------------------------------------------


def local_ring(D: int, p: int) -> LocalRingSpec:
    """The completion at p of the quadratic order of discriminant D."""
    R = ring_from_disc(D)
    j = 0
    f = R.f
    while f % p == 0:
        f //= p
        j += 1
    return LocalRingSpec(p, local_algebra_of(R.D0, p), j)


def family_contains(family: FamilySpec, D: int) -> bool:
    validate_disc(D, allow_square=False)
    if abs(D) > MAX_FACTOR_DISC:
        raise ValueError(f"|D| = {abs(D)} is beyond the factorization bound")
    primes = set(factorint(abs(D))) | set(family.explicit_primes)
    return all(family.contains_ring(local_ring(D, p)) for p in primes)


def _valuation(m: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    v = np.zeros(m.shape, dtype=np.int64)
    u = m.copy()
    while True:
        hit = (u % p == 0) & (u != 0)
        if not hit.any():
            return v, u
        v[hit] += 1
        u[hit] //= p


def local_rings_array(X: int, sign: int, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Algebra index (into quadratic_algebras(p)) and conductor exponent at p
    for every D = sign*m, 0 <= m < X.  Entries for invalid D are meaningless."""
    m = np.arange(X, dtype=np.int64)
    v, u = _valuation(m, p)
    u = sign * u
    alg = np.zeros(X, dtype=np.int64)
    if p == 2:
        j = v // 2
        even = v % 2 == 0
        # u odd; u = 1 mod 4 gives an unramified algebra
        unr = even & (u % 4 == 1)
        alg[unr & (u % 8 == 5)] = 1
        d4 = even & (u % 4 == 3)
        j = np.where(d4, (v - 2) // 2, j)
        alg[d4 & (u % 8 == 7)] = 2
        alg[d4 & (u % 8 == 3)] = 3
        d8 = ~even
        j = np.where(d8, (v - 3) // 2, j)
        for res, k in ((1, 3), (7, 4), (3, 5), (5, 6)):
            alg[d8 & (u % 8 == res)] = k + 1
        return alg, j
    qr = np.array([r != 0 and legendre_symbol(r, p) == 1 for r in range(p)])
    square = qr[u % p]
    j = v // 2
    odd = v % 2 == 1
    alg = np.where(odd, np.where(square, 2, 3), np.where(square, 0, 1))
    return alg, j


def _cond_mask(family: FamilySpec, p: int, alg: np.ndarray, j: np.ndarray) -> np.ndarray:
    cond = family.condition(p)
    if cond == "all":
        return np.ones(alg.shape, dtype=bool)
    if cond == "maximal":
        return j == 0
    kind, items = cond
    if kind == "conductor_exponents":
        return np.isin(j, sorted(items))
    names = quadratic_algebras(p)
    keep = np.zeros(alg.shape, dtype=bool)
    for a, jj in items:
        keep |= (alg == names.index(a)) & (j == jj)
    return keep


def family_mask(family: FamilySpec, X: int, sign: int) -> np.ndarray:
    """Boolean array over m = |D|, 0 <= m < X: D = sign*m is a valid non-square
    discriminant whose order lies in the family."""
    masks = disc_masks(X, sign)
    keep = masks["valid"] & ~masks["square"]
    explicit = set(family.explicit_primes)
    if family.default == "maximal":
        m = np.arange(X, dtype=np.int64)
        if 2 not in explicit:
            keep &= np.isin((sign * m) % 16, (1, 5, 8, 9, 12, 13))
        for p in range(3, isqrt(max(X - 1, 0)) + 1, 2):
            if p in explicit or any(p % q == 0 for q in range(3, isqrt(p) + 1, 2)):
                continue
            keep[:: p * p] = False
    for p in sorted(explicit):
        if p >= X:
            alg = np.zeros(X, dtype=np.int64)
            j = np.zeros(X, dtype=np.int64)
            # only the unramified algebras occur; split or inert by residue
            m = np.arange(X, dtype=np.int64)
            qr = np.array([r != 0 and legendre_symbol(r, p) == 1 for r in range(p)]) if p > 2 else None
            if p == 2:
                alg[(sign * m) % 8 == 5] = 1
            else:
                alg[~qr[(sign * m) % p]] = 1
        else:
            alg, j = local_rings_array(X, sign, p)
        keep &= _cond_mask(family, p, alg, j)
    return keep


# -- cache -----------------------------------------------------------------------


@dataclass(frozen=True)
class CacheRecord:
    D: int
    cl3: int
    i3: int
    n_proj: int
    n_proj_red: int
    n_irred_total: int
    schema_version: int = SCHEMA_VERSION

    def problems(self) -> list[str]:
        out = []
        s = sigma_factor(self.D)
        if self.n_proj != s * self.cl3:
            out.append(f"n_proj {self.n_proj} != {s} * cl3 {self.cl3}")
        u = u3_correction(self.D)
        if self.n_proj_red * u != self.i3:
            out.append(f"n_proj_red {self.n_proj_red} * {u} != i3 {self.i3}")
        return out


class CacheError(RuntimeError):
    pass


class Cache:
    """Append-only line-delimited JSON keyed by D.

    Line one is a header carrying the schema version; each further line is a
    CacheRecord or a coverage marker {"covered": [sign, X]} written after a
    whole range has been stored.  A torn last line is cut off on open.
    """

    def __init__(self, path):
        self.path = os.fspath(path)
        self.records: dict[int, CacheRecord] = {}
        self.covered: set[tuple[int, int]] = set()
        self._open()

    def _open(self):
        if not os.path.exists(self.path) or os.path.getsize(self.path) == 0:
            with open(self.path, "w") as fh:
                fh.write(json.dumps({"schema_version": SCHEMA_VERSION, "tool": "bcftorsion"}) + "\n")
            return
        good = 0
        with open(self.path, "rb") as fh:
            data = fh.read()
        lines = data.split(b"\n")
        try:
            header = json.loads(lines[0])
        except ValueError:
            raise CacheError(f"{self.path}: unreadable header") from None
        if header.get("schema_version") != SCHEMA_VERSION:
            raise CacheError(f"{self.path}: schema version {header.get('schema_version')} != {SCHEMA_VERSION}")
        good = len(lines[0]) + 1
        # the piece after the final newline is either empty or torn
        for raw in lines[1:-1]:
            if not raw:
                break
            try:
                obj = json.loads(raw)
                if "covered" in obj:
                    self.covered.add(tuple(obj["covered"]))
                else:
                    rec = CacheRecord(**obj)
                    self.records[rec.D] = rec
            except (ValueError, TypeError):
                break
            good += len(raw) + 1
        if good < len(data):
            with open(self.path, "r+b") as fh:
                fh.truncate(good)

    def has_range(self, X: int, sign: int) -> bool:
        return any(s == sign and x >= X for s, x in self.covered)

    def add_range(self, X: int, sign: int, recs: Iterable[CacheRecord]) -> None:
        buf = io.StringIO()
        for r in recs:
            if r.D not in self.records:
                buf.write(json.dumps(asdict(r)) + "\n")
                self.records[r.D] = r
        buf.write(json.dumps({"covered": [sign, X]}) + "\n")
        with open(self.path, "a") as fh:
            fh.write(buf.getvalue())
            fh.flush()
            os.fsync(fh.fileno())
        self.covered.add((sign, X))

    def verify(self) -> list[str]:
        return [f"D={r.D}: {msg}" for r in self.records.values() for msg in r.problems()]


# -- statistics ---------------------------------------------------------------------


@dataclass(frozen=True)
class Tables:
    """Per-|D| oracle values and form counts for 0 < sign*D < X."""

    X: int
    sign: int
    cl3: np.ndarray
    i3: np.ndarray
    counts: np.ndarray  # rows as in enumeration.ScanResult

    def record(self, m: int) -> CacheRecord:
        c = self.counts[:, m]
        return CacheRecord(
            self.sign * m, int(self.cl3[m]), int(self.i3[m]), int(c[K.PROJ]), int(c[K.PROJ_RED]), int(c[K.IRRED])
        )


_TABLES: OrderedDict = OrderedDict()


def compute_tables(X: int, sign: int, threads: int = 1) -> Tables:
    """Oracle tables and form counts for (X, sign), memoized on the last few bounds."""
    key = (X, sign)
    if key in _TABLES:
        _TABLES.move_to_end(key)
        return _TABLES[key]
    res = _cached_scan(X, sign, threads)
    t = Tables(X, sign, cl3_table(X, sign), ideal3_table(X, sign), res.counts)
    if len(_TABLES) >= 8:
        _TABLES.popitem(last=False)
    _TABLES[key] = t
    return t


def _tables_from_cache(cache: Cache, X: int, sign: int) -> Tables:
    cl3 = np.zeros(X, dtype=np.int64)
    i3 = np.zeros(X, dtype=np.int64)
    counts = np.zeros((5, X), dtype=np.int64)
    for D, r in cache.records.items():
        m = abs(D)
        if (D > 0) == (sign > 0) and m < X:
            cl3[m], i3[m] = r.cl3, r.i3
            counts[K.PROJ, m], counts[K.PROJ_RED, m], counts[K.IRRED, m] = r.n_proj, r.n_proj_red, r.n_irred_total
    return Tables(X, sign, cl3, i3, counts)


def get_tables(X: int, sign: int, cache: Optional[Cache] = None, threads: int = 1) -> Tables:
    if cache is not None and cache.has_range(X, sign):
        return _tables_from_cache(cache, X, sign)
    t = compute_tables(X, sign, threads)
    if cache is not None:
        masks = disc_masks(X, sign)
        ms = np.nonzero(masks["valid"] & ~masks["square"])[0]
        cache.add_range(X, sign, (t.record(int(m)) for m in ms))
    return t


@dataclass
class StatsRow:
    X: int
    sign: str
    family: str
    n_orders: int
    sum_cl3: int
    sum_i3: int
    sum_diff: Fraction
    avg_cl3: Fraction
    avg_i3: Fraction
    avg_diff: Fraction
    predicted_cl3: Fraction
    predicted_i3: Fraction
    predicted_diff: Fraction
    avg_diff_hred: Fraction = Fraction(0)
    family_hash: str = ""

    def relative_error(self, name: str) -> float:
        pred = getattr(self, f"predicted_{name}")
        return float(abs(getattr(self, f"avg_{name}") - pred) / pred)


PREDICTION_DIGITS = 12


def predicted_mass(family: FamilySpec) -> Fraction:
    """M_Sigma as a short rational: exact when the product is finite, else the
    midpoint of the certified interval rounded to PREDICTION_DIGITS places
    (far inside the interval, whose relative width is about 1e-4)."""
    m = mass(family, 10**4)
    if m.exact:
        return m.value
    scale = 10**PREDICTION_DIGITS
    return Fraction(round(m.value * scale), scale)


def predictions(family: FamilySpec, sign: int) -> tuple[Fraction, Fraction, Fraction]:
    M = predicted_mass(family)
    cl3 = 1 + M if sign < 0 else 1 + M / 3
    return cl3, M, Fraction(1)


def scan(
    X: int,
    sign: int,
    family: FamilySpec = FamilySpec.all_orders(),
    cache: Optional[Cache] = None,
    threads: int = 1,
) -> StatsRow:
    """Averages of |Cl_3|, |I_3| and their difference over the family with 0 < sign*D < X."""
    t = get_tables(X, sign, cache, threads)
    keep = family_mask(family, X, sign)
    n = int(keep.sum())
    if n == 0:
        raise ValueError("no discriminants of the family in range")
    cl3 = t.cl3[keep]
    i3 = t.i3[keep]
    s_cl3, s_i3 = int(cl3.sum()), int(i3.sum())
    w = 1 if sign < 0 else 3  # real orders weight ideal 3-torsion by 1/3
    sum_diff = Fraction(s_cl3) - Fraction(s_i3, w)
    m = np.nonzero(keep)[0]
    u3 = np.where((sign < 0) & (m % 3 == 0) & (m > 3) & _is_three_square(m), 3, 1)
    hred = Fraction(s_cl3) - Fraction(int((i3 // u3).sum()), w)
    pc, pi, pd = predictions(family, sign)
    return StatsRow(
        X,
        "neg" if sign < 0 else "pos",
        family.id,
        n,
        s_cl3,
        s_i3,
        sum_diff,
        Fraction(s_cl3, n),
        Fraction(s_i3, n),
        sum_diff / n,
        pc,
        pi,
        pd,
        hred / n,
        family.hash,
    )


def _is_three_square(m: np.ndarray) -> np.ndarray:
    q = m // 3
    r = np.sqrt(q).round().astype(np.int64)
    return r * r == q


def trend(Xs: Iterable[int], sign: int, family: FamilySpec, stat: str = "cl3", cache: Optional[Cache] = None):
    """[(X, relative error)] for the chosen average across the bounds."""
    return [(X, scan(X, sign, family, cache).relative_error(stat)) for X in Xs]


def monotone_with_slack(errors: list[float], allowed: int = 1) -> bool:
    bad = sum(1 for a, b in zip(errors, errors[1:]) if b > a)
    return bad <= allowed


# -- identities and counts --------------------------------------------------------------


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class VerifyReport:
    bound: int
    checks: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and all(c.ok for c in self.checks)


def verify_identities(bound: int = 3000, census: bool = True) -> VerifyReport:
    """Check n_proj = sigma*cl3 and n_proj_red*u3 = i3 for every valid non-square
    |D| <= bound against the scalar oracles, the two reducible-count routes,
    and for squarefree D the cubic field census against (cl3 - 1)/2."""
    rep = VerifyReport(bound)
    X = bound + 1
    for sign in (-1, 1):
        res = _cached_scan(X, sign)
        mobius_route = proj_reducible_per_disc(X, sign)
        masks = disc_masks(X, sign)
        n = 0
        for m in np.nonzero(masks["valid"] & ~masks["square"])[0]:
            D = sign * int(m)
            rec = res.record(D)
            cr = CacheRecord(D, cl3_count(D), ideal3_count(D), rec.n_proj, rec.n_proj_red, rec.n_irred)
            for msg in cr.problems():
                rep.failures.append(f"D={D}: {msg}")
            # the a = 0 route counts (class, rational root) pairs; only D = -3f^2
            # with f > 1 has reducible projective forms with three roots
            if mobius_route[m] != rec.n_proj_red * u3_correction(D):
                rep.failures.append(f"D={D}: a=0 route {mobius_route[m]} != class count {rec.n_proj_red} * u3")
            n += 1
        rep.checks.append(Check(f"class and ideal identities ({'neg' if sign < 0 else 'pos'})", True, f"{n} discriminants"))
        if census:
            tab = census_table(bound, sign)
            for D, fields_ in tab.items():
                want = (cl3_count(D) - 1) // 2
                if fields_ != want:
                    rep.failures.append(f"D={D}: census {fields_} != (cl3-1)/2 = {want}")
            rep.checks.append(Check(f"cubic field census ({'neg' if sign < 0 else 'pos'})", True, f"{len(tab)} squarefree D"))
    if rep.failures:
        for c in rep.checks:
            c.ok = False
    return rep


@dataclass
class OrderCount:
    X: int
    sign: int
    family: str
    count: int
    predicted: float

    @property
    def ratio(self) -> float:
        return self.count / self.X

    @property
    def relative_error(self) -> float:
        return abs(self.ratio - self.predicted) / self.predicted


def order_count_check(X: int, sign: int = -1, family: FamilySpec = FamilySpec.all_orders()) -> OrderCount:
    count = int(family_mask(family, X, sign).sum())
    return OrderCount(X, sign, family.id, count, order_density(family))


# -- reports ----------------------------------------------------------------------------

COLUMNS = [
    "X",
    "sign",
    "family",
    "family_hash",
    "n_orders",
    "sum_cl3",
    "sum_i3",
    "sum_diff",
    "avg_cl3",
    "avg_i3",
    "avg_diff",
    "avg_diff_hred",
    "predicted_cl3",
    "predicted_i3",
    "predicted_diff",
    "avg_cl3_decimal",
    "avg_i3_decimal",
    "avg_diff_decimal",
    "predicted_cl3_decimal",
    "predicted_i3_decimal",
    "relative_error_cl3",
    "relative_error_i3",
    "relative_error_diff",
    "tool_version",
]

_INT = {"X", "n_orders", "sum_cl3", "sum_i3"}
_FRAC = {f.name for f in fields(StatsRow) if f.type in ("Fraction",)}


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _row_dict(row: StatsRow) -> dict:
    out = {}
    for name in COLUMNS:
        if name == "tool_version":
            out[name] = __version__
        elif name.endswith("_decimal"):
            out[name] = f"{float(getattr(row, name[: -len('_decimal')])):.10f}"
        elif name.startswith("relative_error_"):
            out[name] = f"{row.relative_error(name[len('relative_error_'):]):.10f}"
        else:
            v = getattr(row, name)
            out[name] = _frac(v) if isinstance(v, Fraction) else v
    return out


def report(rows: list, fmt: str = "csv", path=None) -> str:
    """Serialize rows; writes to `path` when given and returns the text."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(_row_dict(r))
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps({"tool_version": __version__, "rows": [_row_dict(r) for r in rows]}, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _row_from_dict(d: dict) -> StatsRow:
    kw = {}
    for f in fields(StatsRow):
        v = d[f.name]
        if f.name in _INT:
            kw[f.name] = int(v)
        elif f.name in _FRAC:
            kw[f.name] = Fraction(v)
        else:
            kw[f.name] = v
    return StatsRow(**kw)


def parse_report(text: str, fmt: str = "csv") -> list:
    if fmt == "csv":
        return [_row_from_dict(d) for d in csv.DictReader(io.StringIO(text))]
    return [_row_from_dict(d) for d in json.loads(text)["rows"]]


def schema_path() -> str:
    return os.path.join(os.path.dirname(__file__), "schema", "report.schema.json")
