"""Compare the numba kernels with the pure NumPy fallback.

Runs the same workload twice: in this process with numba, and in a child
process started with ``HMFLOW_DISABLE_NUMBA=1``. Prints wall times, the
speed-up and the largest difference between the two sets of results.

    python benchmarks/bench_kernels.py [--repeat N] [--json PATH]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workload(repeat: int) -> dict:
    from hmflow import _accel
    from hmflow.evolve import Chart, EvolutionState, Source, evolution_grid, step
    from hmflow.geometry import TargetSurfaceProfile
    from hmflow.kernels import solve_tridiagonal
    from hmflow.shooting import ShootSpec, integrate

    sphere = TargetSurfaceProfile.sphere()
    timings, values = {}, {}

    def timed(name, fn):
        fn()  # warm-up, includes compilation when numba is on
        t0 = time.perf_counter()
        for _ in range(repeat):
            out = fn()
        timings[name] = (time.perf_counter() - t0) / repeat
        values[name] = out

    timed("shoot_d3", lambda: [integrate(ShootSpec(sphere, 3, 2, 0.0, a)).limit
                               for a in (0.5, 1.5, 10.0, 100.0)])
    timed("shoot_d7", lambda: [integrate(ShootSpec(sphere, 7, 6, 0.0, a)).limit
                               for a in (0.1, 1.0, 10.0)])

    rng = np.random.default_rng(0)
    n = 20000
    lower, upper = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
    diag = 2.5 + rng.uniform(0, 1, n)
    b = rng.normal(size=n)
    timed("tridiagonal", lambda: solve_tridiagonal(lower, diag, upper, b)[:8].tolist())

    r = evolution_grid(12.0)
    w0 = np.pi / 2 + 0.3 * r * r * np.exp(-r * r)

    def evolve_steps():
        st = EvolutionState(Chart.SELFSIMILAR, r, w0, 0.0, 7, Source.full(sphere, 6),
                            reference=np.pi / 2)
        for _ in range(20):
            step(st, 0.01)
        return st.u[::97].tolist()

    timed("evolve_20_steps", evolve_steps)
    return {"numba": _accel.HAS_NUMBA, "timings": timings, "values": values}


def _max_diff(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", type=str, default=None)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        json.dump(workload(args.repeat), sys.stdout)
        return

    fast = workload(args.repeat)
    env = dict(os.environ, HMFLOW_DISABLE_NUMBA="1")
    proc = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
                          env=env, capture_output=True, text=True, check=True)
    slow = json.loads(proc.stdout)
    if not fast["numba"]:
        print("numba is unavailable; both runs use the fallback")
    rows = []
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}{'max diff':>12}")
    for name, t_fast in fast["timings"].items():
        t_slow = slow["timings"][name]
        diff = _max_diff(fast["values"][name], slow["values"][name])
        rows.append({"kernel": name, "numba": t_fast, "fallback": t_slow,
                     "speedup": t_slow / t_fast, "max_diff": diff})
        print(f"{name:<18}{t_fast:>12.4f}{t_slow:>12.4f}{t_slow / t_fast:>10.1f}{diff:>12.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
