"""End-to-end acceptance checks at their stated tolerances.

Every check prints one line and is collected in RESULTS; conftest prints a
per-criterion summary at the end of the run. Checks that cannot be met at
X = 10^6 keep their tolerance and are marked xfail(strict=True).
"""
import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from sympy import primerange

from bcftorsion import enumeration as E
from bcftorsion import harness as H
from bcftorsion.correspondence import (
    QuadElement,
    QuadIdeal,
    Triple,
    compose,
    form_to_triple,
    identity_form,
    stabilizer_order_sl2,
    triple_to_form,
)
from bcftorsion.enumeration import ClassFilter, classes_with_disc, count_classes, count_proj_reducible
from bcftorsion.forms import CubicForm, is_projective
from bcftorsion.local_mass import (
    FamilySpec,
    mass,
    mass_factor,
    maximal_density_bruteforce,
    mu_maximal,
    mu_projective,
    projective_density_bruteforce,
)
from bcftorsion.quad_orders import cl3_count, disc_masks, ideal3_count, ring_from_disc, sigma_factor, u3_correction
from bcftorsion.reduction import canonical

BIG = 10**6
ZETA2 = mpmath.zeta(2)
ZETA3 = mpmath.zeta(3)
TREND_XS = [10**4, 31623, 10**5, 316228, 10**6]

RESULTS: dict = {}


def record(n, label, ok, detail=""):
    RESULTS.setdefault(n, []).append((label, bool(ok), detail))
    print(f"criterion {n} [{label}]: {'PASS' if ok else 'FAIL'} {detail}")
    return bool(ok)


def rel(x, target):
    return abs(float(x) - float(target)) / float(target)


def valid_discs(bound, sign):
    masks = disc_masks(bound + 1, sign)
    return [sign * int(m) for m in np.nonzero(masks["valid"] & ~masks["square"])[0]]


# -- 1: roundtrip ----------------------------------------------------------------------


def test_c1_roundtrip_bijection():
    t = time.perf_counter()
    bad, n = [], 0
    for s in (-1, 1):
        for f in E.scan(2001, s, collect=True).forms:
            n += 1
            if canonical(triple_to_form(form_to_triple(f))) != f:
                bad.append(f)
    dt = time.perf_counter() - t
    assert record(1, "roundtrip", not bad and n > 0, f"{n} classes, {len(bad)} failures")
    assert record(1, "runtime <= 120 s", dt <= 120, f"{dt:.1f} s")


# -- 2, 3: per-D identities --------------------------------------------------------------


@pytest.fixture(scope="module")
def per_d_counts():
    t = time.perf_counter()
    out = {s: E._cached_scan(3001, s) for s in (-1, 1)}
    return out, time.perf_counter() - t


def test_c2_class_group_identity(per_d_counts):
    scans, t0 = per_d_counts
    t = time.perf_counter()
    bad, n = [], 0
    for s in (-1, 1):
        for D in valid_discs(3000, s):
            n += 1
            lhs = scans[s].record(D).n_proj
            if lhs != sigma_factor(D) * cl3_count(D):
                bad.append(D)
    dt = t0 + time.perf_counter() - t
    assert record(2, "n_proj = sigma * cl3", not bad, f"{n} discriminants, failures {bad[:5]}")
    assert record(2, "runtime <= 600 s", dt <= 600, f"{dt:.1f} s")


def test_c3_ideal_group_identity(per_d_counts):
    scans, _ = per_d_counts
    bad, n, corrected = [], 0, 0
    for s in (-1, 1):
        for D in valid_discs(3000, s):
            n += 1
            u3 = u3_correction(D)
            corrected += u3 != 1
            if scans[s].record(D).n_proj_red * u3 != ideal3_count(D):
                bad.append(D)
    assert record(3, "n_proj_red * u3 = i3", not bad, f"{n} discriminants ({corrected} with u3 = 3), failures {bad[:5]}")


# -- 4: worked examples ----------------------------------------------------------------------


def test_c4_worked_example_chain():
    D = -44
    I = QuadIdeal.from_generators(D, [QuadElement.of(D, 2), QuadElement(D, Fraction(-1, 2), Fraction(1, 2))])
    t = Triple(ring_from_disc(D), I, QuadElement.of(D, 1))
    ex = CubicForm(0, 2, -1, -1)
    forms, rec = classes_with_disc(D)
    ok = (
        canonical(triple_to_form(t)) == canonical(ex)
        and canonical(ex) in forms
        and cl3_count(D) == 3
        and ideal3_count(D) == 3
        and rec.n_proj - rec.n_proj_red == 0
    )
    assert record(4, "D = -44", ok, f"cl3 {cl3_count(D)}, i3 {ideal3_count(D)}, irred proj {rec.n_proj - rec.n_proj_red}")

    _, rec = classes_with_disc(-23)
    got = (rec.n_proj, rec.n_proj_red, rec.n_proj - rec.n_proj_red)
    assert record(4, "D = -23", got == (3, 1, 2), str(got))

    forms, rec = classes_with_disc(-3)
    got = (rec.n_proj, rec.n_proj_red, rec.n_proj - rec.n_proj_red)
    stabs = [stabilizer_order_sl2(f) for f in forms if is_projective(f)]
    assert record(4, "D = -3", got == (3, 1, 2) and stabs == [3, 3, 3], f"{got}, stabilizers {stabs}")


# -- 5: irreducible totals at 10^6 -----------------------------------------------------------

PI2 = math.pi**2
C5_CASES = {
    ("neg", "irreducible"): (ClassFilter(irreducible=True), PI2 / 12, 0.05),
    ("pos", "irreducible"): (ClassFilter(irreducible=True), PI2 / 4, 0.05),
    ("neg", "projective"): (ClassFilter(irreducible=True, projective=True), 0.5, 0.05),
    ("pos", "projective"): (ClassFilter(irreducible=True, projective=True), 1.5, 0.05),
    ("neg", "maximal"): (ClassFilter(irreducible=True, maximal=True), 3 / PI2, 0.10),
    ("pos", "maximal"): (ClassFilter(irreducible=True, maximal=True), 9 / PI2, 0.10),
}
SLOW_TERM = pytest.mark.xfail(strict=True, reason="X^(5/6) secondary term; see notes on criterion 5")


@pytest.mark.parametrize(
    "key",
    [
        pytest.param(k, marks=[] if k == ("pos", "maximal") else [SLOW_TERM], id="-".join(k))
        for k in C5_CASES
    ],
)
def test_c5_irreducible_totals(key, big_scan):
    flt, target, tol = C5_CASES[key]
    s = -1 if key[0] == "neg" else 1
    d = count_classes(BIG, s, flt, big_scan[s]) / BIG
    assert record(5, " ".join(key), rel(d, target) <= tol, f"{d:.4f} vs {target:.4f} ({rel(d, target):.1%}, tol {tol:.0%})")


def test_c5_runtime(big_scan):
    from conftest import SCAN_SECONDS

    dt = sum(SCAN_SECONDS.values())
    assert record(5, "runtime <= 900 s", dt <= 900, f"{dt:.1f} s for both signs")


def test_c5_two_term_fit_constants():
    # diagnostic: the leading constant of c1 X + c2 X^(5/6) fitted on 10^4..10^6
    Xs = np.array(TREND_XS, dtype=float)
    A = np.stack([Xs, Xs ** (5 / 6)], axis=1)
    for key, (flt, target, _) in C5_CASES.items():
        s = -1 if key[0] == "neg" else 1
        y = np.array([count_classes(X, s, flt, E._cached_scan(X, s)) for X in TREND_XS], dtype=float)
        c1 = np.linalg.lstsq(A, y, rcond=None)[0][0]
        assert record(5, f"fit {' '.join(key)}", rel(c1, target) <= 0.03, f"c1 = {c1:.4f} vs {target:.4f}")


# -- 6: reducible projective totals -------------------------------------------------------------


@pytest.mark.parametrize("sign", [-1, 1], ids=["neg", "pos"])
def test_c6_reducible_projective_totals(sign, big_scan):
    target = float(ZETA2 / (2 * ZETA3))
    mob = count_proj_reducible(BIG, sign) / BIG
    cls = count_classes(BIG, sign, ClassFilter(reducible=True, projective=True), big_scan[sign]) / BIG
    name = "neg" if sign < 0 else "pos"
    assert record(6, f"{name} a=0 route", rel(mob, target) <= 0.05, f"{mob:.5f} vs {target:.5f}")
    assert record(6, f"{name} class route", rel(cls, target) <= 0.05, f"{cls:.5f} vs {target:.5f}")


def test_c6_routes_agree_per_disc(per_d_counts):
    scans, _ = per_d_counts
    bad = []
    for s in (-1, 1):
        prp = E.proj_reducible_per_disc(3001, s)
        for D in valid_discs(3000, s):
            if prp[abs(D)] != u3_correction(D) * scans[s].record(D).n_proj_red:
                bad.append(D)
    assert record(6, "per-D agreement with marked roots", not bad, f"failures {bad[:5]}")


@pytest.mark.xfail(strict=True, reason="a = 0 route counts three marked roots per class at D = -3f^2")
def test_c6_routes_agree_literally(per_d_counts):
    scans, _ = per_d_counts
    bad = []
    for s in (-1, 1):
        prp = E.proj_reducible_per_disc(3001, s)
        bad += [D for D in valid_discs(3000, s) if prp[abs(D)] != scans[s].record(D).n_proj_red]
    assert record(6, "per-D literal equality", not bad, f"{len(bad)} mismatches, e.g. {bad[:4]}")


# -- 7: local densities -----------------------------------------------------------------------


def test_c7_local_densities():
    t = time.perf_counter()
    for p in (2, 3, 5, 7):
        proj = projective_density_bruteforce(p)
        maxi = maximal_density_bruteforce(p)
        want_p, want_m = 1 - Fraction(1, p * p), Fraction((p * p - 1) ** 2, p**4)
        ok = proj == want_p == mu_projective(p) and maxi == want_m == mu_maximal(p)
        assert record(7, f"p = {p}", ok, f"{proj}, {maxi}")
    dt = time.perf_counter() - t
    assert record(7, "runtime", dt <= 30, f"{dt:.2f} s")


# -- 8: mass factors ----------------------------------------------------------------------------


def test_c8_mass_factors():
    ok = all(mass_factor(p, "maximal") == 1 for p in primerange(2, 101))
    assert record(8, "maximal factors are 1, p <= 100", ok)
    bad = [p for p in primerange(2, 51) if mass_factor(p, "all") != Fraction(p**3 - 1, p * (p * p - 1))]
    assert record(8, "all-orders factors, p <= 50", not bad and mass_factor(3, "all") == Fraction(13, 12), f"failures {bad}")
    m = mass(FamilySpec.all_orders(), 10**4)
    z = Fraction(str(ZETA2 / ZETA3))
    assert record(8, "mass(all) brackets zeta(2)/zeta(3)", m.lower <= z <= m.upper, f"[{float(m.lower):.6f}, {float(m.upper):.6f}]")


# -- 9: cubic field census ------------------------------------------------------------------------


def test_c9_census_spot_checks():
    for D, want in ((-23, 1), (-31, 1), (-11, 0), (229, 1)):
        got = E.cubic_census_squarefree(D)
        assert record(9, f"D = {D}", got == want == (cl3_count(D) - 1) // 2, f"{got} fields")


# -- 10: mean-value bands and trends ------------------------------------------------------------


@pytest.fixture(scope="module")
def trend_rows(big_tables):
    fams = {"all": FamilySpec.all_orders(), "maximal": FamilySpec.maximal()}
    rows = {}
    # all families for one (sign, X) before moving on, so the table memo is reused
    for s in (-1, 1):
        for X in TREND_XS:
            for name, fam in fams.items():
                rows[s, name, X] = H.scan(X, s, fam)
    return rows


def _errors(rows, s, fam, stat, target=None):
    out = []
    for X in TREND_XS:
        r = rows[s, fam, X]
        avg = getattr(r, f"avg_{stat}")
        out.append(rel(avg, target if target is not None else getattr(r, f"predicted_{stat}")))
    return out


def test_c10_class_group_bands(trend_rows):
    neg, pos = trend_rows[-1, "all", BIG], trend_rows[1, "all", BIG]
    a, b = float(neg.avg_cl3), float(pos.avg_cl3)
    assert record(10, "imaginary avg cl3 in [2.0, 2.5]", 2.0 <= a <= 2.5, f"{a:.4f} vs {float(neg.predicted_cl3):.5f}")
    assert record(10, "real avg cl3 in [1.30, 1.55]", 1.30 <= b <= 1.55, f"{b:.4f} vs {float(pos.predicted_cl3):.5f}")
    for s, name in ((-1, "imaginary"), (1, "real")):
        errs = _errors(trend_rows, s, "all", "cl3")
        assert record(10, f"{name} cl3 band tightens", H.monotone_with_slack(errs), " ".join(f"{e:.3f}" for e in errs))


def test_c10_ideal_group_bands(trend_rows):
    target = ZETA2 / ZETA3
    for s, name in ((-1, "imaginary"), (1, "real")):
        r = trend_rows[s, "all", BIG]
        assert record(10, f"{name} avg i3 within 10%", rel(r.avg_i3, target) <= 0.10, f"{float(r.avg_i3):.4f}")
        errs = _errors(trend_rows, s, "all", "i3", target)
        assert record(10, f"{name} i3 band tightens", H.monotone_with_slack(errs), " ".join(f"{e:.4f}" for e in errs))


def test_c10_maximal_imaginary(trend_rows):
    avgs = [float(trend_rows[-1, "maximal", X].avg_cl3) for X in TREND_XS]
    assert record(10, "maximal imaginary avg cl3 in [1.7, 2.0]", 1.7 <= avgs[-1] <= 2.0, f"{avgs[-1]:.4f}")
    rising = H.monotone_with_slack([-a for a in avgs]) and avgs[-1] > avgs[0]
    assert record(10, "maximal imaginary increasing in X", rising, " ".join(f"{a:.4f}" for a in avgs))


def test_c10_difference_trend(trend_rows):
    for s, name in ((-1, "imaginary"), (1, "real")):
        errs = _errors(trend_rows, s, "all", "diff")
        assert record(10, f"{name} difference band tightens", H.monotone_with_slack(errs), " ".join(f"{e:.3f}" for e in errs))


@pytest.mark.xfail(strict=True, reason="difference statistic inherits the slow |Cl_3| term at 10^6")
@pytest.mark.parametrize("sign", [-1, 1], ids=["neg", "pos"])
def test_c10_difference_band(sign, trend_rows):
    r = trend_rows[sign, "all", BIG]
    name = "imaginary" if sign < 0 else "real"
    assert record(10, f"{name} difference within 10% of 1", rel(r.avg_diff, 1) <= 0.10, f"{float(r.avg_diff):.4f}")


# -- 11: group laws ---------------------------------------------------------------------------


def test_c11_group_laws(classes_3000, rng):
    proj = {D: [f for f in fs if is_projective(f)] for D, fs in classes_3000.items()}
    cands = sorted(D for D in proj if not _square(D) and cl3_count(D) > 1)
    sample = rng.sample(cands, 50)
    bad = []
    for D in sample:
        cls = proj[D]
        e = canonical(identity_form(D))
        if e not in cls:
            bad.append((D, "identity missing"))
            continue
        for f in cls:
            if compose(e, f) != f or compose(f, e) != f:
                bad.append((D, "identity"))
            if compose(f, compose(f, f)) != e:
                bad.append((D, "cube"))
        for _ in range(10):
            f, g, h = (rng.choice(cls) for _ in range(3))
            if compose(compose(f, g), h) != compose(f, compose(g, h)):
                bad.append((D, "associativity"))
    assert record(11, "50 discriminants with cl3 > 1", len(sample) == 50 and not bad, f"failures {bad[:5]}")


def _square(D):
    return D > 0 and math.isqrt(D) ** 2 == D
