"""Benchmark the simulation kernel: numba JIT path vs pure-numpy fallback.

Runs a fixed supercritical workload on an Erdos-Renyi graph and reports event
throughput. With --compare, the script re-executes itself with
ASISNET_NO_NUMBA=1 and checks that both paths produce the identical sample
path (same seed, same splitmix64 stream) before printing the speedup.

    python benchmarks/kernel_bench.py --compare
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import asisnet as an
from asisnet import _kernels


def workload(n: int, p: float, horizon: float, seed: int) -> dict:
    g = an.gen_erdos_renyi(n, p, seed=1)
    bstar = an.homogeneous_bound(g, 1.0, 1.0, 1.0)
    params = an.homogeneous(g, 2.0 * bstar, 1.0, 1.0, 1.0)
    # warm-up triggers JIT compilation outside the timed region
    an.run(g, params, horizon=1.0, seed=seed)
    t0 = time.perf_counter()
    res = an.run(g, params, horizon=horizon, seed=seed, reinfect_count=1)
    elapsed = time.perf_counter() - t0
    return {
        "numba": _kernels.NUMBA_ENABLED,
        "events": res.stats.event_count,
        "elapsed": elapsed,
        "events_per_s": res.stats.event_count / elapsed,
        "y_integral": res.stats.y_integral,
        "z_integral": res.stats.z_integral,
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--p", type=float, default=0.1)
    ap.add_argument("--horizon", type=float, default=2000.0)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--compare", action="store_true",
                    help="also run the pure-numpy fallback in a subprocess")
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    args = ap.parse_args()

    here = workload(args.n, args.p, args.horizon, args.seed)
    if args.json:
        print(json.dumps(here))
        return 0

    label = "numba" if here["numba"] else "numpy fallback"
    print(f"{label:>16}: {here['events']:>10d} events in {here['elapsed']:8.3f} s "
          f"-> {here['events_per_s']:,.0f} events/s")

    if args.compare:
        if not here["numba"]:
            print("already running in fallback mode; nothing to compare against")
            return 0
        env = dict(os.environ, ASISNET_NO_NUMBA="1")
        cmd = [sys.executable, os.path.abspath(__file__), "--json",
               "--n", str(args.n), "--p", str(args.p),
               "--horizon", str(args.horizon), "--seed", str(args.seed)]
        out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        there = json.loads(out.stdout)
        print(f"{'numpy fallback':>16}: {there['events']:>10d} events in "
              f"{there['elapsed']:8.3f} s -> {there['events_per_s']:,.0f} events/s")
        same = (here["events"] == there["events"]
                and here["y_integral"] == there["y_integral"]
                and here["z_integral"] == there["z_integral"])
        print(f"{'sample paths':>16}: {'identical' if same else 'MISMATCH'}")
        print(f"{'speedup':>16}: {here['events_per_s'] / there['events_per_s']:.1f}x")
        if not same:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
