import json
import math
from fractions import Fraction

import jsonschema
import pytest

from bcftorsion import harness as H
from bcftorsion.harness import (
    Cache,
    CacheError,
    CacheRecord,
    StatsRow,
    family_contains,
    family_mask,
    get_tables,
    local_ring,
    monotone_with_slack,
    order_count_check,
    parse_report,
    report,
    schema_path,
    verify_identities,
)
from bcftorsion.local_mass import INERT, SPLIT, FamilySpec, mass, ramified
from bcftorsion.quad_orders import discriminants, ring_from_disc

TWO_ALL = FamilySpec.from_dict({"2": "all", "default": "maximal"})
FAMILIES = [
    FamilySpec.all_orders(),
    FamilySpec.maximal(),
    TWO_ALL,
    FamilySpec.from_dict({"3": {"conductor_exponents": [0, 1]}, "5": {"rings": [["inert", 0], ["ram2", 0], ["split", 1]]}}),
    FamilySpec.from_dict({"2": {"rings": [["ramified(3)", 0], ["split", 1]]}, "7": "all", "default": "all"}),
    FamilySpec.from_dict({"4099": {"rings": [["inert", 0]]}}),
]


def test_family_contains_examples():
    assert not family_contains(FamilySpec.maximal(), -44)
    assert family_contains(FamilySpec.maximal(), -11)
    assert all(family_contains(FamilySpec.all_orders(), D) for D in (-44, -99, -12, 229, 40))
    assert family_contains(TWO_ALL, -44)
    assert not family_contains(TWO_ALL, -99)


def test_local_ring_examples():
    assert local_ring(-44, 2) == H.LocalRingSpec(2, INERT, 1)  # -11 = 5 mod 8
    assert local_ring(-99, 3).j == 1
    assert local_ring(-4, 2).algebra == ramified(1)
    assert local_ring(-23, 2).algebra == SPLIT
    assert local_ring(-3, 2).algebra == INERT


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.id)
@pytest.mark.parametrize("sign", [-1, 1])
def test_family_mask_matches_factorization(fam, sign):
    X = 3000
    mask = family_mask(fam, X, sign)
    for D in discriminants(X, sign):
        assert mask[abs(D)] == family_contains(fam, D), D
    assert not mask[0]


@pytest.mark.parametrize("sign", [-1, 1])
def test_maximal_family_is_maximal_mask(sign):
    from bcftorsion.quad_orders import disc_masks

    X = 10**5
    masks = disc_masks(X, sign)
    assert (family_mask(FamilySpec.maximal(), X, sign) == (masks["maximal"] & ~masks["square"])).all()
    assert (family_mask(FamilySpec.all_orders(), X, sign) == (masks["valid"] & ~masks["square"])).all()


def test_order_counts_at_one_million():
    assert order_count_check(10**6, -1).relative_error < 0.005
    assert order_count_check(10**6, -1, FamilySpec.maximal()).relative_error < 0.01
    r = order_count_check(10**6, -1, TWO_ALL)
    assert r.predicted == pytest.approx(4 / math.pi**2)
    assert r.relative_error < 0.02


def test_cache_roundtrip_and_resume(tmp_path):
    path = tmp_path / "c.jsonl"
    c = Cache(path)
    assert not c.has_range(2000, -1)
    row1 = H.scan(2000, -1, cache=c)
    assert c.has_range(2000, -1) and c.has_range(1000, -1) and not c.has_range(2000, 1)
    assert not c.verify()
    c2 = Cache(path)
    assert len(c2.records) == len(c.records) > 0
    row2 = H.scan(2000, -1, cache=c2)
    assert row1 == row2
    assert report([row1]) == report([row2])


def test_cache_truncates_torn_tail(tmp_path):
    path = tmp_path / "c.jsonl"
    c = Cache(path)
    get_tables(500, 1, c)
    n = len(c.records)
    size = path.stat().st_size
    with open(path, "a") as fh:
        fh.write('{"D": 7, "cl3": ')
    c2 = Cache(path)
    assert len(c2.records) == n
    assert path.stat().st_size == size
    assert c2.has_range(500, 1)


def test_interrupted_fill_is_not_covered(tmp_path):
    path = tmp_path / "c.jsonl"
    c = Cache(path)
    get_tables(500, -1, c)
    lines = path.read_text().splitlines(keepends=True)
    # drop the coverage marker, as if the run died before it was written
    path.write_text("".join(lines[:-1]))
    c2 = Cache(path)
    assert not c2.has_range(500, -1)
    get_tables(500, -1, c2)
    assert Cache(path).has_range(500, -1)


def test_cache_schema_mismatch(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps({"schema_version": 99}) + "\n")
    with pytest.raises(CacheError):
        Cache(path)
    path.write_text("not json\n")
    with pytest.raises(CacheError):
        Cache(path)


def test_cache_record_invariants():
    assert CacheRecord(-44, 3, 3, 3, 3, 0).problems() == []
    # D = -12: i3 = 3 while n_proj_red = 1, consistent only with u3 = 3
    assert CacheRecord(-12, 1, 3, 1, 1, 0).problems() == []
    assert CacheRecord(-23, 3, 1, 3, 2, 2).problems()
    assert CacheRecord(229, 3, 1, 8, 1, 0).problems()


def test_verify_identities_small():
    rep = verify_identities(400)
    assert rep.ok, rep.failures[:5]
    assert len(rep.checks) == 4


def test_stats_row_invariants():
    for fam in (FamilySpec.all_orders(), FamilySpec.maximal(), TWO_ALL):
        for sign in (-1, 1):
            r = H.scan(20000, sign, fam)
            assert r.avg_cl3 == Fraction(r.sum_cl3, r.n_orders)
            assert r.avg_i3 == Fraction(r.sum_i3, r.n_orders)
            assert r.avg_diff == r.sum_diff / r.n_orders
            M = H.predicted_mass(fam)
            assert M in mass(fam, 10**4)
            assert M.denominator <= 10**H.PREDICTION_DIGITS
            assert r.predicted_i3 == M
            assert r.predicted_cl3 == (1 + M if sign < 0 else 1 + M / 3)
            assert r.predicted_diff == 1
            assert r.family_hash == fam.hash
            if fam.default == "maximal" and not fam.explicit_primes:
                assert r.avg_i3 == 1


def test_scan_empty_family_rejected():
    with pytest.raises(ValueError):
        H.scan(2, -1)


def test_monotone_with_slack():
    assert monotone_with_slack([3, 2, 1])
    assert monotone_with_slack([3, 4, 1])
    assert not monotone_with_slack([3, 4, 2, 5])
    assert monotone_with_slack([3, 4, 2, 5], allowed=2)


@pytest.fixture(scope="module")
def rows():
    return [H.scan(5000, s, f) for s in (-1, 1) for f in (FamilySpec.all_orders(), TWO_ALL)]


def test_csv_roundtrip(rows, tmp_path):
    text = report(rows, "csv", tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text() == text
    assert text.splitlines()[0].split(",") == H.COLUMNS
    assert parse_report(text, "csv") == rows


def test_json_roundtrip_and_schema(rows):
    text = report(rows, "json")
    assert parse_report(text, "json") == rows
    with open(schema_path()) as fh:
        schema = json.load(fh)
    jsonschema.validate(json.loads(text), schema)
    bad = json.loads(text)
    bad["rows"][0]["avg_cl3"] = "1.5"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, schema)


def test_reports_are_deterministic(rows):
    again = [H.scan(5000, s, f) for s in (-1, 1) for f in (FamilySpec.all_orders(), TWO_ALL)]
    assert report(rows, "csv") == report(again, "csv")
    assert report(rows, "json") == report(again, "json")
    with pytest.raises(ValueError):
        report(rows, "xml")


def test_real_difference_uses_third_of_ideal_count(rows):
    r = next(r for r in rows if r.sign == "pos" and r.family == "all")
    assert r.sum_diff == r.sum_cl3 - Fraction(r.sum_i3, 3)
    n = next(r for r in rows if r.sign == "neg" and r.family == "all")
    assert n.sum_diff == n.sum_cl3 - n.sum_i3
    # the H_red statistic divides out u3 on D = -3f^2
    assert n.avg_diff_hred >= n.avg_diff
    assert isinstance(r, StatsRow)


def test_local_ring_conductor():
    R = ring_from_disc(-44 * 9)
    assert (R.D0, R.f) == (-11, 6)
    assert local_ring(-44 * 9, 3).j == 1 and local_ring(-44 * 9, 2).j == 1
