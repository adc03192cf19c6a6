import json

import pytest

from bcftorsion import __version__
from bcftorsion.cli import _bound, build_parser, main
from bcftorsion.harness import parse_report


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_bound_parsing():
    assert _bound("1e6") == 10**6
    assert _bound("5000") == 5000
    with pytest.raises(Exception):
        _bound("-3")


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_enumerate_single_disc(capsys):
    code, out = run(capsys, "enumerate", "--disc", "-44", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["counts"]["n_proj"] == 3 and data["counts"]["n_proj_red"] == 3


def test_enumerate_counts(capsys):
    code, out = run(capsys, "enumerate", "-X", "20000", "--sign", "neg")
    assert code == 0
    assert "irreducible_projective" in out and "[neg]" in out


def test_classgroup_and_idealgroup(capsys):
    code, out = run(capsys, "classgroup", "--disc", "-23", "--format", "json")
    assert code == 0 and json.loads(out)["cl3"] == 3
    code, out = run(capsys, "idealgroup", "--disc", "-12")
    assert code == 0 and "|I_3| = 3" in out and "ok" in out
    code, out = run(capsys, "classgroup", "--disc", "229")
    assert code == 0 and "ok" in out


def test_densities(capsys):
    code, out = run(capsys, "densities", "--primes", "2", "3")
    assert code == 0 and "p = 3" in out


def test_mass(capsys, tmp_path):
    code, out = run(capsys, "mass", "--family", "maximal")
    assert code == 0 and "M = 1/1" in out
    fam = tmp_path / "f.json"
    fam.write_text(json.dumps({"2": "all"}))
    code, out = run(capsys, "mass", "--family", str(fam), "--format", "json")
    assert code == 0 and json.loads(out)["lower"] == "7/6"
    code, out = run(capsys, "mass", "--cutoff", "200")
    assert code == 0 and "M in [1.36" in out


def test_average_formats(capsys, tmp_path):
    cache = tmp_path / "c.jsonl"
    code, out = run(capsys, "average", "-X", "5000", "--format", "csv", "--cache", str(cache), "--threads", "2")
    assert code == 0
    rows = parse_report(out, "csv")
    assert [r.sign for r in rows] == ["neg", "pos"]
    code, again = run(capsys, "average", "-X", "5000", "--format", "csv", "--cache", str(cache))
    assert again == out
    code, out = run(capsys, "average", "-X", "5000", "--sign", "pos")
    assert code == 0 and "avg cl3" in out and "orders / X" in out


def test_verify_and_census(capsys, tmp_path):
    cache = tmp_path / "c.jsonl"
    run(capsys, "average", "-X", "3000", "--cache", str(cache))
    code, out = run(capsys, "verify", "-X", "300", "--cache", str(cache))
    assert code == 0 and "FAIL" not in out
    code, out = run(capsys, "census", "--disc", "-23")
    assert code == 0 and "1 cubic fields" in out
    code, out = run(capsys, "census", "-X", "200", "--format", "json")
    assert code == 0 and json.loads(out)["neg"]["mismatches"] == []


def test_errors_give_exit_code_two(capsys, tmp_path):
    assert main(["classgroup", "--disc", "7"]) == 2
    assert main(["mass", "--family", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"4": "all"}))
    assert main(["mass", "--family", str(bad)]) == 2
    with pytest.raises(SystemExit):
        main(["enumerate", "--sign", "sideways"])


def test_verify_flags_bad_cache(capsys, tmp_path):
    from bcftorsion.harness import Cache, CacheRecord

    cache = tmp_path / "c.jsonl"
    Cache(cache).add_range(30, -1, [CacheRecord(-23, 3, 1, 3, 2, 2)])
    code, out = run(capsys, "verify", "-X", "50", "--cache", str(cache))
    assert code == 1 and "cache invariants: 1 problems" in out
