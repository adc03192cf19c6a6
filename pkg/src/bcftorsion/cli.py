"""Command-line entry point: one subcommand per computation."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from math import pi

from . import __version__

REDUCIBLE_PROJECTIVE_DENSITY = 0.6842161  # zeta(2) / (2 zeta(3))


def _bound(text: str) -> int:
    try:
        value = int(float(text)) if any(ch in text for ch in "eE.") else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer bound: {text}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("bound must be positive")
    return value


def _sign(text: str) -> int:
    table = {"neg": -1, "-": -1, "-1": -1, "imag": -1, "pos": 1, "+": 1, "1": 1, "real": 1}
    if text not in table:
        raise argparse.ArgumentTypeError("sign must be neg or pos")
    return table[text]


def _signs(args) -> list[int]:
    return [args.sign] if args.sign is not None else [-1, 1]


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator} ({float(x):.8f})"


def _family(args):
    from .local_mass import FamilySpec

    if args.family is None:
        return FamilySpec.all_orders()
    if args.family in ("all", "maximal"):
        return FamilySpec.all_orders() if args.family == "all" else FamilySpec.maximal()
    return FamilySpec.load(args.family)


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, default=str))
    else:
        print("\n".join(lines))


# -- subcommands ---------------------------------------------------------------


def cmd_enumerate(args) -> int:
    from .enumeration import ClassFilter, classes_with_disc, count_classes, count_proj_reducible, scan

    if args.disc is not None:
        forms, rec = classes_with_disc(args.disc, bound=max(abs(args.disc), 3000))
        payload = {"D": args.disc, "classes": [list(f.coeffs) for f in forms], "counts": vars(rec)}
        lines = [f"D = {args.disc}: {len(forms)} classes"]
        lines += [f"  {f.coeffs}" for f in forms]
        lines.append(f"  projective {rec.n_proj}, projective reducible {rec.n_proj_red}, irreducible {rec.n_irred}")
        _emit(args, payload, lines)
        return 0
    X = args.bound or 10**5
    payload, lines = {}, []
    for sign in _signs(args):
        res = scan(X, sign, threads=args.threads)
        nstar = 3 if sign < 0 else 1  # definite Hessians carry the extra factor 3
        row = {
            "irreducible": count_classes(X, sign, ClassFilter(irreducible=True), res),
            "irreducible_projective": count_classes(X, sign, ClassFilter(irreducible=True, projective=True), res),
            "irreducible_maximal": count_classes(X, sign, ClassFilter(irreducible=True, maximal=True), res),
            "reducible_projective": count_classes(X, sign, ClassFilter(reducible=True, projective=True), res),
            "reducible_projective_a0": count_proj_reducible(X, sign),
        }
        expected = {
            "irreducible": pi**2 / (4 * nstar),
            "irreducible_projective": 3 / (2 * nstar),
            "irreducible_maximal": 9 / (nstar * pi**2),
            "reducible_projective": REDUCIBLE_PROJECTIVE_DENSITY,
            "reducible_projective_a0": REDUCIBLE_PROJECTIVE_DENSITY,
        }
        name = "neg" if sign < 0 else "pos"
        payload[name] = {k: {"count": v, "per_X": v / X, "limit": expected[k]} for k, v in row.items()}
        lines.append(f"[{name}] X = {X}")
        for k, v in row.items():
            lines.append(f"  {k:<26}{v:>12}  {v / X:.5f}  (limit {expected[k]:.5f})")
    _emit(args, payload, lines)
    return 0


def cmd_classgroup(args) -> int:
    from .enumeration import classes_with_disc
    from .quad_orders import FormClassGroup, cl3_count, sigma_factor

    if args.disc is None:
        raise SystemExit("classgroup needs --disc")
    D = args.disc
    G = FormClassGroup(D)
    cl3 = cl3_count(D)
    ok = True
    payload = {"D": D, "class_number": len(G), "cl3": cl3}
    lines = [f"D = {D}: class number {len(G)}, |Cl_3| = {cl3}"]
    if abs(D) <= 3000:
        _, rec = classes_with_disc(D)
        ok = rec.n_proj == sigma_factor(D) * cl3
        payload["n_proj"] = rec.n_proj
        lines.append(f"  projective cubic classes {rec.n_proj} = {sigma_factor(D)} * {cl3}: {'ok' if ok else 'FAIL'}")
    _emit(args, payload, lines)
    return 0 if ok else 1


def cmd_idealgroup(args) -> int:
    from .enumeration import classes_with_disc
    from .quad_orders import ideal3_count, ideal3_count_direct, u3_correction

    if args.disc is None:
        raise SystemExit("idealgroup needs --disc")
    D = args.disc
    i3 = ideal3_count(D)
    ok = True
    payload = {"D": D, "i3": i3, "u3_correction": u3_correction(D)}
    lines = [f"D = {D}: |I_3| = {i3}, unit correction {u3_correction(D)}"]
    if abs(D) <= 3000:
        direct = ideal3_count_direct(D)
        _, rec = classes_with_disc(D)
        ok = direct == i3 and rec.n_proj_red * u3_correction(D) == i3
        payload.update(i3_direct=direct, n_proj_red=rec.n_proj_red)
        lines.append(f"  direct count {direct}, reducible projective classes {rec.n_proj_red}: {'ok' if ok else 'FAIL'}")
    _emit(args, payload, lines)
    return 0 if ok else 1


def cmd_densities(args) -> int:
    from .local_mass import maximal_density_bruteforce, mu_maximal, mu_projective, projective_density_bruteforce

    primes = args.primes or [2, 3, 5, 7]
    ok = True
    payload, lines = {}, []
    for p in primes:
        mp, mm = mu_projective(p), mu_maximal(p)
        bp, bm = projective_density_bruteforce(p), maximal_density_bruteforce(p)
        ok &= mp == bp and mm == bm
        payload[p] = {"projective": str(mp), "maximal": str(mm), "projective_count": str(bp), "maximal_count": str(bm)}
        lines.append(f"p = {p}: projective {_frac(mp)} [count {bp}], maximal {_frac(mm)} [count {bm}]")
    _emit(args, payload, lines)
    return 0 if ok else 1


def cmd_mass(args) -> int:
    from sympy import primerange

    from .local_mass import mass, mass_factor

    fam = _family(args)
    M = mass(fam, args.cutoff)
    payload = {
        "family": fam.id,
        "family_hash": fam.hash,
        "lower": str(M.lower) if M.exact else float(M.lower),
        "upper": str(M.upper) if M.exact else float(M.upper),
        "exact": M.exact,
        "factors": {p: str(mass_factor(p, fam.condition(p))) for p in primerange(2, 30)},
    }
    lines = [f"family {fam.id}"]
    for p in primerange(2, 30):
        lines.append(f"  p = {p:<3} factor {_frac(mass_factor(p, fam.condition(p)))}")
    if M.exact:
        lines.append(f"M = {_frac(M.lower)}")
    else:
        lines.append(f"M in [{float(M.lower):.8f}, {float(M.upper):.8f}] (primes up to {M.cutoff} exact)")
    _emit(args, payload, lines)
    return 0


def cmd_average(args) -> int:
    from . import harness

    fam = _family(args)
    cache = harness.Cache(args.cache) if args.cache else None
    X = args.bound or 10**5
    rows = [harness.scan(X, sign, fam, cache, threads=args.threads) for sign in _signs(args)]
    if args.format in ("csv", "json"):
        sys.stdout.write(harness.report(rows, args.format))
        return 0
    for r in rows:
        print(f"[{r.sign}] X = {r.X}, family {r.family}, {r.n_orders} orders")
        for stat in ("cl3", "i3", "diff"):
            avg, pred = getattr(r, f"avg_{stat}"), getattr(r, f"predicted_{stat}")
            print(f"  avg {stat:<5}{float(avg):.6f}  predicted {float(pred):.6f}  rel. error {r.relative_error(stat):.4f}")
        print(f"  avg diff with reducible classes in place of ideals {float(r.avg_diff_hred):.6f}")
        oc = harness.order_count_check(X, -1 if r.sign == "neg" else 1, fam)
        print(f"  orders / X {oc.ratio:.6f}  predicted {oc.predicted:.6f}")
    return 0


def cmd_verify(args) -> int:
    from . import harness

    bound = args.bound or 3000
    rep = harness.verify_identities(bound if args.force else min(bound, 3000))
    ok = rep.ok
    lines = [f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.detail}" for c in rep.checks]
    lines += [f"FAIL  {msg}" for msg in rep.failures]
    payload = {"bound": rep.bound, "ok": rep.ok, "checks": [vars(c) for c in rep.checks], "failures": rep.failures}
    if args.cache:
        problems = harness.Cache(args.cache).verify()
        ok &= not problems
        lines.append(f"{'PASS' if not problems else 'FAIL'}  cache invariants: {len(problems)} problems")
        lines += [f"FAIL  {msg}" for msg in problems[:20]]
        payload["cache_problems"] = problems
    _emit(args, payload, lines)
    return 0 if ok else 1


def cmd_census(args) -> int:
    from .enumeration import census_table, cubic_census_squarefree
    from .quad_orders import cl3_count

    ok = True
    if args.disc is not None:
        n = cubic_census_squarefree(args.disc, bound=max(abs(args.disc), 3000))
        want = (cl3_count(args.disc) - 1) // 2
        ok = n == want
        _emit(args, {"D": args.disc, "fields": n, "expected": want}, [f"D = {args.disc}: {n} cubic fields, (cl3 - 1)/2 = {want}"])
        return 0 if ok else 1
    bound = min(args.bound or 3000, 3000)
    payload, lines = {}, []
    for sign in _signs(args):
        tab = census_table(bound, sign)
        bad = [D for D, n in tab.items() if 2 * n != cl3_count(D) - 1]
        ok &= not bad
        payload["neg" if sign < 0 else "pos"] = {"discriminants": len(tab), "fields": sum(tab.values()), "mismatches": bad}
        lines.append(f"[{'neg' if sign < 0 else 'pos'}] {len(tab)} squarefree D, {sum(tab.values())} fields, {len(bad)} mismatches")
    _emit(args, payload, lines)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-X", "--bound", type=_bound, help="discriminant bound")
    common.add_argument("--sign", type=_sign, help="neg or pos (default: both)")
    common.add_argument("--family", help="FamilySpec JSON path, or 'all' / 'maximal'")
    common.add_argument("--cache", help="path of the JSONL cache file")
    common.add_argument("--threads", type=int, default=1, help="worker threads for the form scan")
    common.add_argument("--format", choices=("text", "csv", "json"), default="text")

    parser = argparse.ArgumentParser(prog="bcftorsion", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="classes of one discriminant or counts up to a bound")
    p.add_argument("--disc", type=int)
    p.set_defaults(func=cmd_enumerate)
    p = sub.add_parser("classgroup", parents=[common], help="3-torsion of the class group")
    p.add_argument("--disc", type=int)
    p.set_defaults(func=cmd_classgroup)
    p = sub.add_parser("idealgroup", parents=[common], help="3-torsion of the ideal group")
    p.add_argument("--disc", type=int)
    p.set_defaults(func=cmd_idealgroup)
    p = sub.add_parser("densities", parents=[common], help="local densities against finite counts")
    p.add_argument("--primes", type=int, nargs="*")
    p.set_defaults(func=cmd_densities)
    p = sub.add_parser("mass", parents=[common], help="cubic mass of a family")
    p.add_argument("--cutoff", type=int, default=10**4)
    p.set_defaults(func=cmd_mass)
    p = sub.add_parser("average", parents=[common], help="mean 3-torsion over a family")
    p.set_defaults(func=cmd_average)
    p = sub.add_parser("verify", parents=[common], help="per-discriminant identity suite")
    p.add_argument("--force", action="store_true", help="allow bounds above 3000")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("census", parents=[common], help="cubic fields at squarefree discriminants")
    p.add_argument("--disc", type=int)
    p.set_defaults(func=cmd_census)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
