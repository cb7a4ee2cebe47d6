"""Command-line entry point: ``plantkyber {verify,range-report,cost-report,kat}``.

Exit codes: 0 success, 1 a check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bounds, cost, kat
from .isa import PROFILES
from .ntt import STRATEGIES, inverse_schedule
from .verify import SUITES, run_suite


class UsageError(Exception):
    pass


def _variant(variant, k):
    if variant == "speed":
        return "speed"
    if k not in (2, 3, 4):
        raise UsageError(f"--k must be 2, 3 or 4 for the stack variant, got {k}")
    return f"stack{k}"


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        res = run_suite(name, args.iterations, args.seed)
        print(res.summary())
        ok &= res.passed
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_range_report(args):
    variant = _variant(args.variant, args.k)
    sched = inverse_schedule(args.strategy, variant)
    if args.derive:
        sched = bounds.derive_reduction_points(sched)
    seed = bounds.default_input_bound(variant) if args.exact_input else bounds.nominal_input_bound(variant)
    rep = bounds.propagate(sched, seed)
    print(rep.to_json(indent=2) if args.json else rep.to_text())
    return 0 if rep.passed else 1


def cmd_cost_report(args):
    profiles = PROFILES if args.profile == "all" else (args.profile,)
    reports = cost.all_reports(profiles)
    if args.csv:
        sys.stdout.write(cost.to_csv(reports))
    elif args.json:
        print(json.dumps([{"algorithm": r.algorithm, "profile": r.profile, "counts": r.counts,
                           "muls": r.mul_total, "total": r.total, "cycles": r.cycles()}
                          for r in reports], indent=2))
    else:
        print(cost.to_table(reports))
    return 0


def cmd_kat(args):
    path = Path(args.path)
    if args.action == "generate":
        records = kat.generate(args.seed, args.count)
        path.write_text(kat.dumps(records))
        print(f"wrote {len(records)} records to {path}")
        return 0
    try:
        records = kat.loads(path.read_text())
    except kat.KatFormatError as e:
        print(f"malformed KAT file: {e}")
        return 1
    bad = kat.check(records)
    if bad is not None:
        print(f"mismatch at record {bad}")
        return 1
    print(f"{len(records)} records OK")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="plantkyber", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a self-check suite")
    v.add_argument("suite", choices=[*SUITES, "all"])
    v.add_argument("--iterations", type=int, default=None)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("range-report", help="coefficient bounds through an INTT schedule")
    r.add_argument("--variant", choices=["stack", "speed"], default="stack")
    r.add_argument("--strategy", choices=list(STRATEGIES), default="gs34")
    r.add_argument("--k", type=int, default=2)
    r.add_argument("--json", action="store_true")
    r.add_argument("--derive", action="store_true",
                   help="search reduction points instead of using the published ones")
    r.add_argument("--exact-input", action="store_true",
                   help="seed with the largest integer input instead of kq/2")
    r.set_defaults(func=cmd_range_report)

    c = sub.add_parser("cost-report", help="instruction counts per kernel")
    c.add_argument("--profile", choices=[*PROFILES, "all"], default="all")
    fmt = c.add_mutually_exclusive_group()
    fmt.add_argument("--csv", action="store_true")
    fmt.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_cost_report)

    k = sub.add_parser("kat", help="known-answer tests")
    k.add_argument("action", choices=["generate", "check"])
    k.add_argument("path")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--count", type=int, default=4, help="records per operation")
    k.set_defaults(func=cmd_kat)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        ap.error(str(e))


if __name__ == "__main__":
    sys.exit(main())
