"""Benchmark the accelerated kernels against the pure-numpy fallback.

Runs each workload in-process, then re-executes itself in a subprocess with
INFLUTRACK_NO_NUMBA=1 and prints both timings side by side:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --nodes 100 --repeats 50
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from influtrack._kernels import USING_NUMBA
from influtrack.diffusion import ExponentialDelays, influence_oracle
from influtrack.estimator import (
    EstimatorConfig,
    estimate_node_influences,
    estimate_support_influences,
)
from influtrack.graphs import SbmParams, sbm_sample


def build_workloads(n_nodes, repeats):
    half = n_nodes // 2
    g = sbm_sample(SbmParams((half, n_nodes - half), 0.3, 0.01, seed=2024))
    delays = ExponentialDelays(1.0, 10.0)
    config = EstimatorConfig(n_delay_sets=10, n_label_sets=10, horizon=1.5)
    support = np.array([0, n_nodes - 1])

    def full_estimate():
        rng = np.random.default_rng(1)
        for _ in range(repeats):
            estimate_node_influences(g, delays, config, rng)

    def support_estimate():
        rng = np.random.default_rng(2)
        for _ in range(10 * repeats):
            estimate_support_influences(g, delays, config, support, rng)

    def oracle():
        influence_oracle(g, delays, [0], 1.5, 200 * repeats,
                         np.random.default_rng(3))

    return [("all-nodes estimate x%d" % repeats, full_estimate),
            ("support estimate x%d" % (10 * repeats), support_estimate),
            ("oracle %d cascades" % (200 * repeats), oracle)]


def run_benchmarks(n_nodes, repeats):
    results = {}
    for name, fn in build_workloads(n_nodes, repeats):
        fn()  # warm-up (JIT compilation, caches)
        t0 = time.perf_counter()
        fn()
        results[name] = time.perf_counter() - t0
    return results


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=30)
    parser.add_argument("--json", action="store_true",
                        help="print raw timings as JSON (used internally)")
    args = parser.parse_args(argv)

    results = run_benchmarks(args.nodes, args.repeats)
    if args.json:
        print(json.dumps(results))
        return 0

    if not USING_NUMBA:
        print("numba path unavailable (INFLUTRACK_NO_NUMBA set?); "
              "timing the fallback only")
        for name, secs in results.items():
            print("  %-28s %8.1f ms" % (name, 1e3 * secs))
        return 0

    env = os.environ.copy()
    env["INFLUTRACK_NO_NUMBA"] = "1"
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--nodes", str(args.nodes),
         "--repeats", str(args.repeats), "--json"],
        env=env, capture_output=True, text=True, check=True)
    fallback = json.loads(proc.stdout)

    print("%-28s %12s %12s %9s" % ("workload", "numba", "numpy", "speedup"))
    for name, secs in results.items():
        other = fallback[name]
        print("%-28s %9.1f ms %9.1f ms %8.1fx"
              % (name, 1e3 * secs, 1e3 * other, other / secs))
    return 0


if __name__ == "__main__":
    sys.exit(main())
