"""Benchmark the numba-compiled simplex pivot kernel against the pure-numpy
fallback.

Run twice to compare:

    python3 benchmarks/bench_kernels.py
    DELAYFLOW_NO_NUMBA=1 python3 benchmarks/bench_kernels.py

or pass --both to fork the measurement into subprocesses with and without
the flag and print a side-by-side summary.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def make_lp(rng: np.random.Generator, m: int, n: int):
    from delayflow.lp import LinearProgram

    a = rng.integers(-4, 5, size=(m, n)).astype(float)
    b = rng.integers(1, 10, size=m).astype(float)
    c = rng.integers(-4, 5, size=n).astype(float)
    rels = tuple(rng.choice(["<=", "=", ">="], size=m))
    return LinearProgram("max" if rng.random() < 0.5 else "min", c, a, rels, b)


def measure(sizes, reps: int) -> dict:
    from delayflow._kernels import USE_NUMBA
    from delayflow.lp import solve_lp

    rng = np.random.default_rng(7)
    warm = make_lp(rng, 10, 10)
    solve_lp(warm, engine="simplex")  # trigger jit compilation

    results = {"numba": bool(USE_NUMBA), "cases": []}
    for m, n in sizes:
        lps = [make_lp(rng, m, n) for _ in range(reps)]
        t0 = time.perf_counter()
        statuses = [solve_lp(lp, engine="simplex").status for lp in lps]
        dt = time.perf_counter() - t0
        results["cases"].append(
            {
                "m": m,
                "n": n,
                "reps": reps,
                "seconds": dt,
                "per_solve_ms": 1000 * dt / reps,
                "optimal": statuses.count("optimal"),
            }
        )
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--both", action="store_true", help="run both kernel paths")
    parser.add_argument("--reps", type=int, default=30)
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args()

    sizes = [(20, 20), (60, 60), (120, 120), (200, 150)]
    if args.both:
        rows = {}
        for flag in ("0", "1"):
            env = dict(os.environ, DELAYFLOW_NO_NUMBA=flag)
            out = subprocess.run(
                [sys.executable, __file__, "--json", "--reps", str(args.reps)],
                env=env,
                capture_output=True,
                text=True,
                check=True,
            )
            rows[flag] = json.loads(out.stdout)
        print(f"{'size':>10} {'numba ms':>12} {'numpy ms':>12} {'speedup':>9}")
        for a, b in zip(rows["0"]["cases"], rows["1"]["cases"]):
            print(
                f"{a['m']}x{a['n']:<6} {a['per_solve_ms']:>12.2f} "
                f"{b['per_solve_ms']:>12.2f} "
                f"{b['per_solve_ms'] / a['per_solve_ms']:>8.2f}x"
            )
        return 0

    results = measure(sizes, args.reps)
    if args.json:
        print(json.dumps(results))
        return 0
    kind = "numba" if results["numba"] else "pure numpy"
    print(f"kernel path: {kind}")
    for case in results["cases"]:
        print(
            f"{case['m']:>4}x{case['n']:<4} {case['per_solve_ms']:8.2f} ms/solve "
            f"({case['optimal']}/{case['reps']} optimal)"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
