#!/usr/bin/env python3
"""Benchmark the two mesh slot-loop kernels: numba @njit vs numpy fallback.

Runs identical workloads through both paths, verifies they produce the same
deliveries, and reports throughput.  The numba path pays a one-time JIT cost
that is excluded via a warmup run.

Usage: python benchmarks/bench_mesh_kernel.py [--slots N] [--nodes N] [--repeat K]
"""

import argparse
import time

from netgym import _mesh_kernels
from netgym.mesh import MeshConfig, MeshState, graded_cw_vector


def time_kernel(kernel, config, slots, repeat):
    best = float("inf")
    delivered = None
    for i in range(repeat):
        state = MeshState(config, seed=1)
        state.set_cw_vector(graded_cw_vector(config.num_nodes))
        t0 = time.perf_counter()
        delivered = state.run_slots(slots, kernel=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, delivered


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--slots", type=int, default=1_000_000)
    parser.add_argument("--nodes", type=int, default=5)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    config = MeshConfig(num_nodes=args.nodes)
    rows = []

    if _mesh_kernels.run_slots_njit is not None:
        # warmup compiles the kernel so timing measures steady state
        warm = MeshState(config, seed=0)
        warm.run_slots(16, kernel=_mesh_kernels.run_slots_njit)
        t, delivered_njit = time_kernel(
            _mesh_kernels.run_slots_njit, config, args.slots, args.repeat
        )
        rows.append(("numba @njit", t, delivered_njit))
    else:
        delivered_njit = None
        print("numba path unavailable (disabled or not installed); skipping it")

    t, delivered_np = time_kernel(
        _mesh_kernels.run_slots_fallback, config, args.slots, args.repeat
    )
    rows.append(("numpy fallback", t, delivered_np))

    if delivered_njit is not None and delivered_njit != delivered_np:
        raise SystemExit(
            f"paths disagree: njit delivered {delivered_njit}, numpy {delivered_np}"
        )

    print(f"\n{args.slots:,} slots, {args.nodes} nodes, best of {args.repeat}:")
    print(f"{'kernel':<16} {'seconds':>10} {'slots/sec':>14} {'delivered':>10}")
    for name, seconds, delivered in rows:
        print(f"{name:<16} {seconds:>10.4f} {args.slots / seconds:>14,.0f} {delivered:>10}")
    if len(rows) == 2:
        print(f"\nspeedup (njit over numpy): {rows[1][1] / rows[0][1]:.1f}x")


if __name__ == "__main__":
    main()
