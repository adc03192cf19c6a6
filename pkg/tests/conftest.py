import random
import sys
import time

import pytest

from bcftorsion import enumeration as E
from bcftorsion.forms import reduced_disc
from bcftorsion import harness as H

BIG = 10**6


SCAN_SECONDS = {}


@pytest.fixture(scope="session")
def big_scan():
    """Class counts up to 10^6 for both signs, computed once (single-threaded)."""
    out = {}
    for s in (-1, 1):
        t = time.perf_counter()
        out[s] = E._cached_scan(BIG, s)
        SCAN_SECONDS.setdefault(s, time.perf_counter() - t)
    return out


@pytest.fixture(scope="session")
def big_tables(big_scan):
    """Oracle tables and counts up to 10^6, shared with harness.scan."""
    return {s: H.compute_tables(BIG, s) for s in (-1, 1)}


@pytest.fixture(scope="session")
def classes_3000():
    """Canonical classes grouped by reduced discriminant, 0 < |D| <= 3000."""
    out = {}
    for s in (-1, 1):
        res = E.scan(3001, s, collect=True)
        for f in res.forms:
            out.setdefault(reduced_disc(f), []).append(f)
    return out


@pytest.fixture
def rng():
    return random.Random(20240917)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        subs = results[n]
        failed = [label for label, ok, _ in subs if not ok]
        line = f"criterion {n:>2}: {'PASS' if not failed else 'FAIL'}  ({len(subs) - len(failed)}/{len(subs)} checks)"
        if failed:
            line += "  below stated tolerance (xfail strict): " + "; ".join(failed)
        terminalreporter.write_line(line)
