"""Counting SL2(Z)-classes of integer-matrix cubic forms.

Two routes are provided. `classes_with_disc` solves for d exactly inside
the coefficient region and canonicalizes every hit, one discriminant at a
time. `scan` walks the whole fundamental domain with the compiled kernels
and tallies canonical representatives per |disc|; forms on walls with extra
automorphisms (and, for positive discriminants, forms whose position is
too close to a wall for floating point) are settled by exact
canonicalization in Python.
"""

from __future__ import annotations

from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import gcd, isqrt
from typing import Callable, Optional

import numpy as np
from sympy import factorint
from sympy.functions.combinatorial.numbers import mobius

from . import _kernels as K
from .forms import CubicForm, Flavor, classical_disc, is_projective, is_reducible, reduced_disc
from .quad_orders import disc_masks, is_square, validate_disc
from .reduction import canonical, reduce_neg, reduce_pos

__all__ = [
    "ClassFilter",
    "CountRecord",
    "ScanResult",
    "reduce_neg",
    "reduce_pos",
    "canonical",
    "classes_with_disc",
    "scan",
    "count_classes",
    "count_reducible_a0",
    "reducible_a0_per_disc",
    "count_proj_reducible",
    "proj_reducible_per_disc",
    "cubic_census_squarefree",
    "census_table",
    "nonmaximal_at_prime",
]

DEFAULT_DISC_BOUND = 3000
DEFAULT_STREAM_BOUND = 10**6
MAX_STREAM_BOUND = 10**12  # keeps every kernel intermediate inside int64


@dataclass(frozen=True)
class ClassFilter:
    irreducible: bool = False
    projective: bool = False
    reducible: bool = False
    maximal: bool = False
    family: Optional[object] = None  # a local_mass.FamilySpec

    def __post_init__(self):
        if self.irreducible and self.reducible:
            raise ValueError("irreducible and reducible filters exclude each other")


@dataclass
class CountRecord:
    D: int
    n_total: int = 0
    n_proj: int = 0
    n_proj_red: int = 0
    n_irred: int = 0

    def add(self, f: CubicForm) -> None:
        proj = is_projective(f)
        red = is_reducible(f)
        self.n_total += 1
        self.n_proj += proj
        self.n_proj_red += proj and red
        self.n_irred += not red


# -- coefficient region ----------------------------------------------------


def region_bounds(X: int, sign: int) -> tuple[int, int]:
    """Integer bounds on |a| and |b| for reduced forms with 0 < sign*disc < X."""
    x4 = X**0.25
    if sign < 0:
        return int(1.0746 * x4) + 1, int(1.0746 * x4) + 1
    return int(2.4495 * x4) + 1, int(1.3732 * x4) + 1


def _c_bound(X: int, sign: int, a: int) -> int:
    k = 4 if sign < 0 else 20
    return int(round((k * X / (3 * abs(a))) ** (1 / 3))) + 2


def _solve_d(a: int, b: int, c: int, D: int) -> list[int]:
    # all integers d with reduced_disc(a, b, c, d) = D
    if a == 0:
        if b == 0:
            return []
        num = D + 3 * b * b * c * c
        den = 4 * b**3
        return [num // den] if num % den == 0 else []
    A = b * b - a * c
    w2 = a * a * D + 4 * A**3
    if w2 < 0:
        return []
    w = isqrt(w2)
    if w * w != w2:
        return []
    base = 3 * a * b * c - 2 * b**3
    out = []
    for W in {w, -w}:
        if (W + base) % (a * a) == 0:
            out.append((W + base) // (a * a))
    return out


def classes_with_disc(D: int, bound: int = DEFAULT_DISC_BOUND) -> tuple[list[CubicForm], CountRecord]:
    """Canonical representatives of all classes of reduced discriminant D."""
    if D == 0:
        raise ValueError("discriminant must be nonzero")
    if abs(D) > bound:
        raise ValueError(f"|D| = {abs(D)} exceeds the configured bound {bound}")
    sign = 1 if D > 0 else -1
    X = abs(D) + 1
    amax, bmax = region_bounds(X, sign)
    found = set()
    for a in range(-amax, amax + 1):
        for b in range(-bmax, bmax + 1):
            if a == 0:
                cs = range(-abs(b), abs(b) + 1)
            else:
                cm = _c_bound(X, sign, a)
                cs = range(-cm, cm + 1)
            for c in cs:
                for d in _solve_d(a, b, c, D):
                    found.add(canonical(CubicForm(a, b, c, d)))
    forms = sorted(found, key=lambda f: f.coeffs, reverse=True)
    rec = CountRecord(D)
    for f in forms:
        rec.add(f)
        if D == 1 and not is_reducible(f):
            # over Z x Z every admissible delta is a cube
            raise AssertionError(f"irreducible form {f} of discriminant 1")
    return forms, rec


# -- streaming counts ------------------------------------------------------


@dataclass
class ScanResult:
    X: int
    sign: int
    counts: np.ndarray  # shape (5, X), indexed by |disc|
    forms: list = field(default_factory=list)
    visited_exact: int = 0  # forms settled in Python

    ROWS = {"total": K.TOTAL, "proj": K.PROJ, "proj_red": K.PROJ_RED, "irred": K.IRRED, "irred_proj": K.IRRED_PROJ}

    def row(self, name: str) -> np.ndarray:
        return self.counts[self.ROWS[name]]

    def record(self, D: int) -> CountRecord:
        m = abs(D)
        c = self.counts[:, m]
        return CountRecord(D, int(c[K.TOTAL]), int(c[K.PROJ]), int(c[K.PROJ_RED]), int(c[K.IRRED]))


def _partitions(X: int, sign: int, parts: Optional[int]) -> list[tuple[int, int]]:
    amax, _ = region_bounds(X, sign)
    values = list(range(-amax, amax + 1))
    # the a = 0 slice carries the reducible bulk; keep it on its own
    if not parts:
        return [(a, a + 1) for a in values]
    step = max(1, -(-len(values) // parts))
    return [(values[i], values[min(i + step, len(values)) - 1] + 1) for i in range(0, len(values), step)]


def _run_partition(kernel, lo: int, hi: int, X: int, collect: bool):
    part = np.zeros((5, X), dtype=np.int64)
    cap_s, cap_c = 4096, (1 << 16) if collect else 1
    while True:
        special = np.zeros((cap_s, 4), dtype=np.int64)
        coll = np.zeros((cap_c, 4), dtype=np.int64)
        part[:] = 0
        ns, nc = kernel(lo, hi, X, part, special, coll, collect)
        if ns <= cap_s and (not collect or nc <= cap_c):
            return part, special[:ns], coll[:nc] if collect else coll[:0]
        cap_s, cap_c = max(cap_s, ns), max(cap_c, nc)


def scan(
    X: int,
    sign: int,
    collect: bool = False,
    progress: Optional[Callable[[int, int, int], None]] = None,
    parts: Optional[int] = None,
    threads: int = 1,
) -> ScanResult:
    """Per-|disc| class counts for 0 < sign*disc < X.

    The a-range is split into partitions that are processed independently
    (on `threads` worker threads) and merged by addition in partition
    order, so the result does not depend on `parts` or `threads`.
    `progress(done, total, classes_so_far)` is called after each partition.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not 1 <= X <= MAX_STREAM_BOUND:
        raise OverflowError(f"bound {X} outside the supported range")
    kernel = K.neg_kernel if sign < 0 else K.pos_kernel
    counts = np.zeros((5, X), dtype=np.int64)
    result = ScanResult(X, sign, counts)
    chunks = _partitions(X, sign, parts)
    run = lambda ch: _run_partition(kernel, ch[0], ch[1], X, collect)  # noqa: E731
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def batches():
        # a batch at a time keeps at most `threads` partial count arrays alive
        step = max(threads, 1)
        for k in range(0, len(chunks), step):
            batch = chunks[k : k + step]
            yield from (pool.map(run, batch) if pool else map(run, batch))

    outputs = batches()
    try:
        for i, (part, special, coll) in enumerate(outputs):
            counts += part
            if collect:
                result.forms.extend(CubicForm(*map(int, row)) for row in coll)
            for row in special:
                f = CubicForm(*map(int, row))
                result.visited_exact += 1
                if canonical(f) != f:
                    continue
                m = abs(reduced_disc(f))
                proj, red = is_projective(f), is_reducible(f)
                counts[K.TOTAL, m] += 1
                counts[K.PROJ, m] += proj
                counts[K.PROJ_RED, m] += proj and red
                counts[K.IRRED, m] += not red
                counts[K.IRRED_PROJ, m] += proj and not red
                if collect:
                    result.forms.append(f)
            if progress is not None:
                progress(i + 1, len(chunks), int(counts[K.TOTAL].sum()))
    finally:
        if pool is not None:
            pool.shutdown()
    if sign > 0 and X > 1 and counts[K.IRRED, 1]:
        raise AssertionError("irreducible form of discriminant 1")
    return result


_SCANS: OrderedDict = OrderedDict()


def _cached_scan(X: int, sign: int, threads: int = 1) -> ScanResult:
    """scan(X, sign), memoized on (X, sign); the thread count does not change the result."""
    key = (X, sign)
    if key in _SCANS:
        _SCANS.move_to_end(key)
    else:
        if len(_SCANS) >= 12:
            _SCANS.popitem(last=False)
        _SCANS[key] = scan(X, sign, threads=threads)
    return _SCANS[key]


def count_classes(X: int, sign: int, flt: ClassFilter = ClassFilter(), result: Optional[ScanResult] = None) -> int:
    """Number of classes with 0 < sign*disc < X passing the filter.

    Perfect-square discriminants are left out (they are not orders in a
    quadratic field); `scan` reports them separately.
    """
    res = result if result is not None else _cached_scan(X, sign)
    if flt.irreducible:
        name = "irred_proj" if flt.projective else "irred"
        row = res.row(name)
    elif flt.reducible:
        row = res.row("proj_red") if flt.projective else res.row("total") - res.row("irred")
    else:
        row = res.row("proj") if flt.projective else res.row("total")
    masks = disc_masks(X, sign)
    keep = masks["valid"] & ~masks["square"]
    if flt.maximal:
        keep &= masks["maximal"]
    if flt.family is not None:
        from .harness import family_mask

        keep &= family_mask(flt.family, X, sign)
    return int(row[keep].sum())


# -- the a = 0 path --------------------------------------------------------


def _a0_ranges(X: int, sign: int, b: int, c: int, exact: bool) -> tuple[int, int]:
    # d-range for 3b x^2 y + 3c x y^2 + d y^3 (b > 0) with 0 < sign*disc < X
    if sign < 0:
        # disc = b^2 (4bd - 3c^2) in (-X, 0)
        lo = (3 * b * b * c * c - X) // (4 * b**3) + 1
        hi = cdiv_int(3 * c * c, 4 * b) - 1
        if not exact:
            hi = min(hi, (c * c - b * b) // b)
    else:
        lo = (3 * c * c) // (4 * b) + 1
        hi = cdiv_int(X + 3 * b * b * c * c, 4 * b**3) - 1
        if not exact:
            lo = max(lo, 3 * b + 1)
    return lo, hi


def cdiv_int(a: int, b: int) -> int:
    return -((-a) // b)


def _b_limit(X: int, sign: int, exact: bool) -> int:
    if exact:
        # b^2 <= |disc| < X
        return isqrt(X - 1)
    return int((4 / 3 if sign < 0 else 32 / 9) ** 0.25 * X**0.25) + 1


def count_reducible_a0(X: int, sign: int, n: int = 1, exact: bool = False) -> int:
    """Forms 3b x^2 y + 3c x y^2 + d y^3 with b > 0, n | gcd(b, c), 0 < sign*disc < X.

    With exact=False the c- and d-ranges are those of the reduced-covariant
    (negative) or reduced-factor (positive) region with a = 0, which counts
    reducible classes up to a boundary error. With exact=True each
    reducible class of non-square discriminant is counted once: the
    forms with a = 0 fall into orbits under x -> x + r y, and -b < c <= b,
    b > 0 is a transversal.
    """
    if n < 1:
        raise ValueError("n must be positive")
    total = 0
    for b in range(n, _b_limit(X, sign, exact) + 1, n):
        for c in range(-b + 1, b + 1):
            if c % n:
                continue
            lo, hi = _a0_ranges(X, sign, b, c, exact)
            if hi >= lo:
                total += hi - lo + 1
    return total


def reducible_a0_per_disc(X: int, sign: int, n: int = 1) -> np.ndarray:
    """Exact per-|disc| version of count_reducible_a0(..., exact=True)."""
    out = np.zeros(X, dtype=np.int64)
    for b in range(n, _b_limit(X, sign, True) + 1, n):
        for c in range(-b + 1, b + 1):
            if c % n:
                continue
            lo, hi = _a0_ranges(X, sign, b, c, True)
            if hi < lo:
                continue
            d = np.arange(lo, hi + 1, dtype=np.int64)
            m = np.abs(b * b * (4 * b * d - 3 * c * c))
            np.add.at(out, m, 1)
    return out


def _squarefree_upto(N: int) -> list[int]:
    return [k for k in range(1, N + 1) if mobius(k) != 0]


def count_proj_reducible(X: int, sign: int, exact: bool = True) -> int:
    """Sum over squarefree n of mu(n) * count_reducible_a0(X, sign, n).

    This counts reducible projective classes with a marked rational root:
    the Hessian of an a = 0 form is primitive exactly when gcd(b, c) = 1.
    Away from D = -3f^2 (f > 1) every such class has one root. In exact
    mode the square discriminants, which carry three a = 0 orbits per
    class, are removed.
    """
    total = 0
    for n in _squarefree_upto(_b_limit(X, sign, exact)):
        total += int(mobius(n)) * count_reducible_a0(X, sign, n, exact)
    if exact and sign > 0:
        total -= _square_disc_proj_a0(X)
    return total


def _square_disc_proj_a0(X: int) -> int:
    # transversal forms with gcd(b, c) = 1 and disc = k^2 < X
    total = 0
    for k in range(1, isqrt(X - 1) + 1):
        D = k * k
        for b in range(1, k + 1):
            if D % (b * b):
                continue
            t = D // (b * b)
            for c in range(-b + 1, b + 1):
                if gcd(b, c) == 1 and (t + 3 * c * c) % (4 * b) == 0:
                    total += 1
    return total


def proj_reducible_per_disc(X: int, sign: int) -> np.ndarray:
    """Per-|disc| Moebius sum of the exact a = 0 counts, square discriminants zeroed.

    This counts projective forms with a marked rational root, so it equals
    u3_correction(D) times the number of reducible projective classes.
    """
    out = np.zeros(X, dtype=np.int64)
    for n in _squarefree_upto(isqrt(X - 1)):
        out += int(mobius(n)) * reducible_a0_per_disc(X, sign, n)
    out[disc_masks(X, sign)["square"]] = 0
    return out


def nonmaximal_at_prime(result: ScanResult, p: int) -> int:
    """Classes (any kind) whose discriminant fails maximality at p."""
    m = np.arange(result.X)
    if p == 2:
        D = result.sign * m
        bad = ~np.isin(D % 16, (1, 5, 8, 9, 12, 13))
    else:
        bad = m % (p * p) == 0
    bad[0] = False
    masks = disc_masks(result.X, result.sign)
    bad &= masks["valid"] & ~masks["square"]
    return int(result.row("total")[bad].sum())


# -- cubic fields at squarefree discriminant --------------------------------


def cubic_census_squarefree(D: int, bound: int = DEFAULT_DISC_BOUND) -> int:
    """Number of cubic fields of discriminant D, for squarefree D.

    A classical form F has 3F = (3a, b, c, 3d) in the integer-matrix lattice
    with reduced discriminant -3 Disc(F), and canonicalization commutes
    with scaling, so the classes of F are the classes of reduced
    discriminant -3D whose outer coefficients are divisible by 3. GL2
    classes pair each class with its image under (x, y) -> (x, -y).
    """
    if abs(D) > bound:
        raise ValueError(f"|D| = {abs(D)} exceeds the configured bound {bound}")
    if D in (0, 1) or any(e > 1 for e in factorint(abs(D)).values()):
        raise ValueError(f"{D} is not a squarefree non-square discriminant")
    forms, _ = classes_with_disc(-3 * D, bound=3 * bound)
    return _count_fields(forms, D)


def _count_fields(forms, D: int) -> int:
    seen = set()
    fields = 0
    for g in forms:
        if g.a % 3 or g.d % 3 or is_reducible(g):
            continue
        F = CubicForm(g.a // 3, g.b, g.c, g.d // 3, Flavor.CLASSICAL)
        assert classical_disc(F) == D
        if g in seen:
            continue
        seen.add(g)
        seen.add(canonical(CubicForm(-g.a, g.b, -g.c, g.d)))
        fields += 1
    return fields


def census_table(bound: int, sign: int) -> dict[int, int]:
    """cubic_census_squarefree(D) for every squarefree discriminant D with 0 < sign*D <= bound.

    Uses one collecting scan of reduced discriminants of the opposite sign
    up to 3*bound instead of a region search per D.
    """
    res = scan(3 * bound + 1, -sign, collect=True)
    by_disc: dict[int, list] = {}
    for g in res.forms:
        if g.a % 3 == 0 and g.d % 3 == 0:
            by_disc.setdefault(reduced_disc(g), []).append(g)
    out = {}
    for m in range(1, bound + 1):
        D = sign * m
        if D % 4 != 1 or D == 1 or any(e > 1 for e in factorint(m).values()):
            continue
        out[D] = _count_fields(by_disc.get(-3 * D, []), D)
    return out
