"""Benchmark the compiled retrieval kernel against the pure-Python one.

Runs the full offline pipeline on identical random workloads with each
backend (the backend is chosen at import, so each measurement happens in a
fresh subprocess) and reports wall time plus speedup.

Usage: python benchmarks/bench_retrieval.py [--users N] [--repeat K]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = """
import json, sys, time
from fpbs.cli import generate_workload
from fpbs.simulator import run_offline
import fpbs.retrieval as retrieval

cfg = json.loads(sys.argv[1])
queries = generate_workload(cfg["catalog"], cfg["users"], cfg["qmax"], cfg["seed"])
run_offline(queries, cfg["channels"], "fre")  # warm-up
best = None
for _ in range(cfg["repeat"]):
    t0 = time.perf_counter()
    report = run_offline(queries, cfg["channels"], "fre")
    dt = time.perf_counter() - t0
    best = dt if best is None else min(best, dt)
print(json.dumps({
    "backend": retrieval.BACKEND,
    "seconds": best,
    "mean_latency": float(report.mean_latency),
}))
"""


def measure(cfg, pure):
    env = dict(os.environ)
    if pure:
        env["FPBS_PURE_PYTHON"] = "1"
    else:
        env.pop("FPBS_PURE_PYTHON", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps(cfg)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--catalog", type=int, default=150)
    ap.add_argument("--users", type=int, default=800)
    ap.add_argument("--qmax", type=int, default=8)
    ap.add_argument("--channels", type=int, default=6)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cfg = vars(args)

    compiled = measure(cfg, pure=False)
    pure = measure(cfg, pure=True)
    if compiled["mean_latency"] != pure["mean_latency"]:
        print("WARNING: backends disagree on mean latency!", file=sys.stderr)
    print(f"workload: {args.users} queries, catalog {args.catalog}, "
          f"qmax {args.qmax}, {args.channels} channels")
    for r in (pure, compiled):
        print(f"  {r['backend']:>7}: {r['seconds']*1000:8.1f} ms  "
              f"(mean latency {r['mean_latency']:.3f})")
    if compiled["backend"] == pure["backend"]:
        print("compiled kernel unavailable; both runs used the fallback")
    else:
        print(f"  speedup: {pure['seconds'] / compiled['seconds']:.2f}x "
              f"(whole pipeline, retrieval kernel portion only)")


if __name__ == "__main__":
    main()
