#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel backends on the same scenario.

Runs the benchmark pack (default 200 cells, 60 s horizon at h=0.01) under
both backends, reports wall time and steps/s, and cross-checks that the two
trajectories agree.

    python benchmarks/bench_backends.py [--cells N] [--t-end S] [--h H]
"""

import argparse
import time

import numpy as np

from socpack import analysis, backend, scenario


def time_run(sc, name):
    backend.set_backend(name)
    sc.run()  # warm-up (JIT compile / cache load)
    t0 = time.perf_counter()
    trace = sc.run()
    dt = time.perf_counter() - t0
    return trace, dt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cells", type=int, default=200)
    ap.add_argument("--t-end", type=float, default=60.0)
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sc = scenario.benchmark_scenario(seed=args.seed, n_cells=args.cells,
                                 t_end=args.t_end, h=args.h)
    n_steps = int(round(args.t_end / args.h))
    results = {}
    for name in ("numba", "numpy"):
        try:
            trace, dt = time_run(sc, name)
        except ImportError:
            print(f"{name:6s}  unavailable")
            continue
        results[name] = (trace, dt)
        print(f"{name:6s}  {dt:8.3f} s   {n_steps / dt:10.0f} steps/s   "
              f"{trace.jumps.n_jumps} jumps")
    if len(results) == 2:
        a, b = results["numba"][0], results["numpy"][0]
        same_rows = a.n_samples == b.n_samples
        d_soc = np.max(np.abs(a.soc_hat - b.soc_hat)) if same_rows else np.inf
        d_plant = np.max(np.abs(a.soc - b.soc)) if same_rows else np.inf
        speedup = results["numpy"][1] / results["numba"][1]
        print(f"speedup: {speedup:.1f}x   max |soc_hat| diff: {d_soc:.3e}   "
              f"max plant diff: {d_plant:.3e}")
        cfg, params = sc.cfg, sc.params
        for name, (trace, _) in results.items():
            rep = analysis.verify_trace(trace, cfg, params)
            print(f"{name:6s}  bound checks: "
                  + ("all PASS" if rep.passed else "FAIL"))


if __name__ == "__main__":
    main()
