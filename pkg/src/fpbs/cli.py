"""Command-line front end: workload generation, scheduling, simulation,
parameter sweeps, and invariant verification.

Exit codes: 0 success, 1 usage error, 2 input validation error,
3 invariant breach detected.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .model import ScheduleError, check_conflict_free, normalize_query
from .oracle import flat_baseline_schedule
from .scheduler import RULES, RULE_FREQUENCY, RULE_REQUEST_NUMBER, SchedulerError
from .simulator import expected_access_time, fpbs_schedule, run_offline, run_online

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_INVARIANT = 3

DEFAULT_SKEW = 0.8


class ValidationError(Exception):
    """Bad workload input (file syntax or out-of-range parameters)."""


class InvariantBreach(Exception):
    """A property the scheduler guarantees was observed to fail."""


# ---------------------------------------------------------------------------
# Workload generation / ingestion


def zipf_weights(catalog: int, skew: float) -> np.ndarray:
    ranks = np.arange(1, catalog + 1, dtype=float)
    w = ranks ** -skew
    return w / w.sum()


def generate_workload(catalog, users, qmax, seed, skew=DEFAULT_SKEW):
    """Random batch: each user requests a Zipf-weighted sample (without
    replacement) of 1..qmax items; arrival slots are uniform over [1, users]
    and assigned in sorted order so qid order matches arrival order."""
    if catalog < 1 or users < 1 or qmax < 1:
        raise ValidationError("catalog, users and qmax must all be >= 1")
    if qmax > catalog:
        raise ValidationError(f"qmax {qmax} exceeds catalog size {catalog}")
    rng = np.random.default_rng(seed)
    weights = zipf_weights(catalog, skew)
    arrivals = np.sort(rng.integers(1, users + 1, size=users))
    queries = []
    for i in range(users):
        size = int(rng.integers(1, qmax + 1))
        items = rng.choice(catalog, size=size, replace=False, p=weights) + 1
        q, _ = normalize_query(i + 1, int(arrivals[i]), [int(d) for d in items])
        queries.append(q)
    return queries


def dump_workload(queries, fh):
    fh.write("# qid,arrival,items(;-separated)\n")
    for q in queries:
        fh.write(f"{q.qid},{q.arrival_seq},{';'.join(str(d) for d in q.items)}\n")


def ingest_workload(fh, warn=None):
    """Parses the qid,arrival,items format; raises ValidationError with a
    line number on malformed input.  Duplicate items within a query are
    dropped with a warning."""
    queries = []
    seen_qids = set()
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValidationError(
                f"line {lineno}: expected 'qid,arrival,items', got {line!r}"
            )
        try:
            qid = int(parts[0])
            arrival = int(parts[1])
            items = [int(tok) for tok in parts[2].split(";") if tok]
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        if qid in seen_qids:
            raise ValidationError(f"line {lineno}: duplicate qid {qid}")
        seen_qids.add(qid)
        try:
            q, dropped = normalize_query(qid, arrival, items)
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        if dropped and warn:
            warn(f"line {lineno}: dropped {dropped} duplicate item(s) in query {qid}")
        queries.append(q)
    if not queries:
        raise ValidationError("workload contains no queries")
    return queries


# ---------------------------------------------------------------------------
# Experiments


def run_experiment(queries, channels, rule, mode, buffer_capacity=None):
    if mode == "offline":
        return run_offline(queries, channels, rule)
    if mode == "online":
        cap = buffer_capacity if buffer_capacity else len(queries)
        arrivals = sorted(
            ((q, q.arrival_seq) for q in queries), key=lambda t: (t[1], t[0].qid)
        )
        return run_online(arrivals, cap, channels, rule)
    raise ValidationError(f"unknown mode {mode!r}")


def run_flat_baseline(queries, channels):
    schedule = flat_baseline_schedule(queries, channels)
    violations = check_conflict_free(schedule, queries)
    from .simulator import ExperimentReport, _outcomes_for_batch

    outcomes = _outcomes_for_batch(schedule, queries, 0, {})
    return ExperimentReport(
        config={"mode": "offline", "channels": channels, "rule": "flat"},
        per_query=outcomes,
        conflict_count=len(violations),
        cycle_lengths=[schedule.length],
        distinct_items=len({d for q in queries for d in q.items}),
        schedules=[schedule],
    )


VARIANTS = {
    "fpbs-rn": lambda qs, ch, buf: run_experiment(qs, ch, RULE_REQUEST_NUMBER, "offline"),
    "fpbs-fre": lambda qs, ch, buf: run_experiment(qs, ch, RULE_FREQUENCY, "offline"),
    "fpbs-rn-online": lambda qs, ch, buf: run_experiment(
        qs, ch, RULE_REQUEST_NUMBER, "online", buf
    ),
    "fpbs-fre-online": lambda qs, ch, buf: run_experiment(
        qs, ch, RULE_FREQUENCY, "online", buf
    ),
    "flat-baseline": lambda qs, ch, buf: run_flat_baseline(qs, ch),
}

SUMMARY_COLUMNS = [
    "axis",
    "value",
    "variant",
    "queries",
    "distinct_items",
    "cycles",
    "total_cycle_slots",
    "conflicts",
    "mean_latency",
    "mean_access",
    "mean_span",
    "p95_latency",
]


def fmt(x) -> str:
    return f"{float(x):.6f}"


def summary_row(axis, value, variant, report):
    return {
        "axis": axis,
        "value": value,
        "variant": variant,
        "queries": len(report.per_query),
        "distinct_items": report.distinct_items,
        "cycles": len(report.cycle_lengths),
        "total_cycle_slots": sum(report.cycle_lengths),
        "conflicts": report.conflict_count,
        "mean_latency": fmt(report.mean_latency),
        "mean_access": fmt(report.mean_access),
        "mean_span": fmt(report.mean_span),
        "p95_latency": fmt(report.percentile(95)),
    }


def write_detail(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "qid",
                "arrival",
                "batch_wait",
                "access",
                "latency",
                "span",
                "switches",
                "skips",
                "cycle_length",
            ]
        )
        for qid in sorted(report.per_query):
            r = report.per_query[qid]
            w.writerow(
                [
                    r.qid,
                    r.arrival_seq,
                    r.batch_wait,
                    fmt(r.access),
                    fmt(r.latency),
                    r.span,
                    fmt(r.switches),
                    fmt(r.skips),
                    r.cycle_length,
                ]
            )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_generate(args):
    queries = generate_workload(args.catalog, args.users, args.qmax, args.seed, args.skew)
    if args.out:
        with open(args.out, "w") as fh:
            dump_workload(queries, fh)
    else:
        dump_workload(queries, sys.stdout)
    return EXIT_OK


def _load_queries(args):
    if args.workload:
        with open(args.workload) as fh:
            return ingest_workload(fh, warn=lambda m: print(m, file=sys.stderr))
    return generate_workload(args.catalog, args.users, args.qmax, args.seed, args.skew)


def cmd_schedule(args):
    queries = _load_queries(args)
    _, tree, schedule = fpbs_schedule(queries, args.channels, args.rule)
    text = schedule.serialize()
    if args.tree:
        text += tree.serialize()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    violations = check_conflict_free(schedule, queries)
    if violations:
        print(f"ERROR: {len(violations)} conflict(s) in the schedule", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_simulate(args):
    queries = _load_queries(args)
    report = run_experiment(queries, args.channels, args.rule, args.mode, args.buffer)
    if report.conflict_count:
        print(f"ERROR: {report.conflict_count} conflict(s)", file=sys.stderr)
        return EXIT_INVARIANT
    row = summary_row(args.mode, "-", f"fpbs-{args.rule}", report)
    for k in SUMMARY_COLUMNS:
        print(f"{k}: {row[k]}")
    if args.out:
        write_detail(report, args.out)
    return EXIT_OK


SWEEP_AXES = ("catalog", "channels", "qmax", "buffer")


def cmd_sweep(args):
    values = []
    for tok in args.values.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            values.append(int(tok))
        except ValueError:
            raise ValidationError(f"sweep value {tok!r} is not an integer") from None
    if not values:
        raise ValidationError("no sweep values given")
    os.makedirs(args.out, exist_ok=True)

    if args.axis == "buffer":
        variants = ["fpbs-rn-online", "fpbs-fre-online"]
    else:
        variants = ["fpbs-rn", "fpbs-fre", "flat-baseline"]

    config = {
        "axis": args.axis,
        "values": values,
        "catalog": args.catalog,
        "users": args.users,
        "qmax": args.qmax,
        "channels": args.channels,
        "buffer": args.buffer,
        "seed": args.seed,
        "skew": args.skew,
        "variants": variants,
    }
    with open(os.path.join(args.out, "config.json"), "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")

    summary_rows = []
    timing_rows = []
    for value in values:
        params = {
            "catalog": args.catalog,
            "users": args.users,
            "qmax": args.qmax,
            "channels": args.channels,
            "buffer": args.buffer,
        }
        params[args.axis] = value
        if params["qmax"] > params["catalog"]:
            params["qmax"] = params["catalog"]
        queries = generate_workload(
            params["catalog"], params["users"], params["qmax"], args.seed, args.skew
        )
        for variant in variants:
            t0 = time.perf_counter()
            report = VARIANTS[variant](queries, params["channels"], params["buffer"])
            elapsed = time.perf_counter() - t0
            if report.conflict_count:
                raise InvariantBreach(
                    f"{variant} at {args.axis}={value}: "
                    f"{report.conflict_count} conflict(s)"
                )
            summary_rows.append(summary_row(args.axis, value, variant, report))
            timing_rows.append(
                {"axis": args.axis, "value": value, "variant": variant,
                 "seconds": f"{elapsed:.4f}"}
            )
            write_detail(
                report, os.path.join(args.out, f"detail_{args.axis}{value}_{variant}.csv")
            )
    with open(os.path.join(args.out, "summary.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        w.writerows(summary_rows)
    # Wall-clock timings live in a sidecar so summary.csv stays
    # byte-reproducible for a fixed seed.
    with open(os.path.join(args.out, "timings.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["axis", "value", "variant", "seconds"])
        w.writeheader()
        w.writerows(timing_rows)
    print(f"wrote {len(summary_rows)} summary rows to {args.out}/summary.csv")
    return EXIT_OK


def cmd_verify(args):
    """Schedules the workload with both rules and checks the guarantees:
    conflict-freedom and per-query latency never beyond its tune-in wait
    plus one full cycle.  Whether the cycle length equals the number of
    distinct requested items is reported (it is not guaranteed)."""
    queries = _load_queries(args)
    distinct = len({d for q in queries for d in q.items})
    problems = []
    for rule in RULES:
        report = run_experiment(queries, args.channels, rule, args.mode, args.buffer)
        if report.conflict_count:
            problems.append(f"{rule}: {report.conflict_count} conflict(s)")
        for r in report.per_query.values():
            if r.max_retrieval_stretch > r.cycle_length:
                problems.append(
                    f"{rule}: query {r.qid} retrieval stretches "
                    f"{r.max_retrieval_stretch} > cycle {r.cycle_length}"
                )
        exact = sum(1 for L in report.cycle_lengths if L == distinct)
        print(
            f"{rule}: {len(report.per_query)} queries, "
            f"cycles {report.cycle_lengths}, conflicts {report.conflict_count}, "
            f"mean latency {fmt(report.mean_latency)}, "
            f"cycle==distinct in {exact}/{len(report.cycle_lengths)} cycles"
        )
    if problems:
        for p in problems:
            print(f"BREACH: {p}", file=sys.stderr)
        return EXIT_INVARIANT
    print("all invariants hold")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def add_workload_args(p):
    p.add_argument("--workload", help="workload file (overrides generation flags)")
    p.add_argument("--catalog", type=int, default=100, help="catalog size")
    p.add_argument("--users", type=int, default=50, help="number of queries")
    p.add_argument("--qmax", type=int, default=5, help="max items per query")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--skew", type=float, default=DEFAULT_SKEW, help="Zipf skew")


def build_parser():
    parser = Parser(prog="fpbs", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("generate", parents=[], help="emit a random workload")
    p.add_argument("--catalog", type=int, default=100)
    p.add_argument("--users", type=int, default=50)
    p.add_argument("--qmax", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skew", type=float, default=DEFAULT_SKEW)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("schedule", help="build and print a broadcast schedule")
    add_workload_args(p)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--rule", choices=RULES, default=RULE_FREQUENCY)
    p.add_argument("--tree", action="store_true", help="also dump the tree")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="run the client access simulation")
    add_workload_args(p)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--rule", choices=RULES, default=RULE_FREQUENCY)
    p.add_argument("--mode", choices=("offline", "online"), default="offline")
    p.add_argument("--buffer", type=int, default=None, help="online buffer capacity")
    p.add_argument("--out", help="per-query detail CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one parameter, write CSV reports")
    add_workload_args(p)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--buffer", type=int, default=None)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check scheduler guarantees on a workload")
    add_workload_args(p)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--mode", choices=("offline", "online"), default="offline")
    p.add_argument("--buffer", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InvariantBreach as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ScheduleError, SchedulerError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
