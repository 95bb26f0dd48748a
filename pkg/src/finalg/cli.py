"""Command-line interface.

Exit codes: 0 success or equal, 1 differs, 2 error, 3 UNKNOWN classification.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .analyzer import UNKNOWN, classify_cm, classify_simple, exhaustive_equiv, is_simple, report
from .circuits import dump_evaluable, load_evaluable, size_of
from .congruence import Congruence, congruence_lattice
from .core_algebra import validate_algebra
from .fixtures import fixture
from .local import classify_type
from .passes import PASS_NAMES, run_pass

EXIT_OK, EXIT_DIFFERS, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2, 3


def load_algebra(ref: str):
    """A JSON file path, or a fixture id when no such file exists."""
    if os.path.exists(ref):
        with open(ref) as fh:
            return validate_algebra(json.load(fh))
    return fixture(ref)


def load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _congruence(text: str, lat):
    text = text.strip()
    if "," in text:
        return Congruence([int(x) for x in text.split(",")])
    return lat.members[int(text)]


def cmd_algebra_validate(args):
    alg = load_algebra(args.file)
    print(f"ok: {alg.name}, size {alg.size}, ops {', '.join(f'{o.name}/{o.arity}' for o in alg.operations)}")
    return EXIT_OK


def cmd_con_lattice(args):
    alg = load_algebra(args.file)
    lat = congruence_lattice(alg)
    print(lat.to_dot() if args.dot else lat.to_text())
    return EXIT_OK


def cmd_tct_type(args):
    alg = load_algebra(args.file)
    lat = congruence_lattice(alg)
    lo, hi = _congruence(args.alpha, lat), _congruence(args.beta, lat)
    pq = classify_type(alg, lo, hi, args.budget)
    print(f"type {pq.type_label}" + (f" (characteristic {pq.characteristic})" if pq.characteristic else ""))
    if pq.evidence:
        print(f"evidence: {pq.evidence}")
    return EXIT_UNKNOWN if pq.type_label == "unclassified" else EXIT_OK


def cmd_classify(args):
    alg = load_algebra(args.file)
    simple = args.simple or (not args.cm and is_simple(alg))
    label = classify_simple(alg, args.budget) if simple else classify_cm(alg, args.budget)
    text, records = report({"classification": label})
    print(text)
    if args.results:
        with open(args.results, "w") as fh:
            fh.write(records + "\n")
    return EXIT_UNKNOWN if label.kind == UNKNOWN else EXIT_OK


def cmd_compile(args):
    src = load_evaluable(load_json(args.inp))
    alg = load_algebra(args.algebra) if args.algebra else None
    primes = [int(p) for p in args.primes.split(",")] if args.primes else None
    out = run_pass(args.pass_name, src, algebra=alg, primes=primes, m=args.m, h=args.h)
    with open(args.out, "w") as fh:
        fh.write(dump_evaluable(out))
    print(f"{args.pass_name}: source size {size_of(src).total}, target size {size_of(out).total}")
    if args.verify:
        v = exhaustive_equiv(src, out)
        print(f"verify: {v}")
        return EXIT_OK if v.equal else EXIT_DIFFERS
    return EXIT_OK


def cmd_verify(args):
    lhs = load_evaluable(load_json(args.lhs))
    rhs = load_evaluable(load_json(args.rhs))
    v = exhaustive_equiv(lhs, rhs, args.arity)
    print(v)
    return EXIT_OK if v.equal else EXIT_DIFFERS


def cmd_fixture(args):
    alg = fixture(args.id)
    text = alg.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="finalg", description="Finite algebras, programs and circuit compilers.")
    sub = ap.add_subparsers(dest="command", required=True)

    alg = sub.add_parser("algebra").add_subparsers(dest="sub", required=True)
    p = alg.add_parser("validate")
    p.add_argument("file")
    p.set_defaults(fn=cmd_algebra_validate)

    con = sub.add_parser("con").add_subparsers(dest="sub", required=True)
    p = con.add_parser("lattice")
    p.add_argument("file")
    p.add_argument("--dot", action="store_true")
    p.set_defaults(fn=cmd_con_lattice)

    tct = sub.add_parser("tct").add_subparsers(dest="sub", required=True)
    p = tct.add_parser("type")
    p.add_argument("file")
    p.add_argument("--alpha", required=True, help="lattice index or comma-separated block labels")
    p.add_argument("--beta", required=True)
    p.add_argument("--budget", type=int, default=200000)
    p.set_defaults(fn=cmd_tct_type)

    p = sub.add_parser("classify")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--simple", action="store_true")
    g.add_argument("--cm", action="store_true")
    p.add_argument("--budget", type=int, default=200000)
    p.add_argument("--results", help="write line-delimited JSON results here")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("compile")
    p.add_argument("--pass", dest="pass_name", required=True,
                   help="one of: " + ", ".join(PASS_NAMES) + " (ASCII '->' and '+' accepted)")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--algebra", help="target algebra for bool→type3 (file or fixture id)")
    p.add_argument("--primes", help="block primes for itdet→solvable, output block first")
    p.add_argument("--m", type=int)
    p.add_argument("--h", type=int)
    p.add_argument("--verify", action="store_true", help="check the result exhaustively")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("verify")
    p.add_argument("--lhs", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--arity", type=int)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("fixture")
    p.add_argument("id")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_fixture)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
