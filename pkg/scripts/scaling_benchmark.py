#!/usr/bin/env python3
"""Sampler throughput across lattice sizes.

Times run_shots on growing cycles (and optionally a torus) to show the
per-shot cost grows linearly with the number of sites.
"""

import argparse
import time

from pepslhv import decomposition, sampling
from pepslhv.configio import build_instance


def time_cycle(n_sites, shots, seed, workers):
    inst = build_instance(
        {
            "lattice": f"cycle:{n_sites}",
            "basis": "aligned:2:zero",
            "measurements": "noisy-pauli:2:0.5",
            "psi": "plus-diag:2",
            "site_map": {"recipe": 2, "epsilon": 0.2},
        }
    )
    plan = sampling.MeasurementPlan.uniform(inst, "ZZ~0.5")
    dists = decomposition.edge_distribution(inst)
    t0 = time.perf_counter()
    sampling.run_shots(inst, plan, shots, seed, edge_dists=dists, workers=workers)
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sites", default="50,100,200,400")
    parser.add_argument("--shots", type=int, default=10**4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--torus", action="store_true", help="also run a 10x10 torus")
    args = parser.parse_args()

    print(f"{'sites':>8} {'seconds':>10} {'shots/s':>12}")
    for n in (int(x) for x in args.sites.split(",")):
        dt = time_cycle(n, args.shots, args.seed, args.workers)
        print(f"{n:>8} {dt:>10.3f} {args.shots / dt:>12.0f}")

    if args.torus:
        inst = build_instance(
            {
                "lattice": "torus:10x10",
                "basis": "aligned:2:zero",
                "measurements": "noisy-pauli:4:0.5",
                "psi": "plus-diag:4",
                "site_map": {"recipe": 2, "epsilon": 0.1},
            }
        )
        plan = sampling.MeasurementPlan.uniform(inst, "ZZZZ~0.5")
        t0 = time.perf_counter()
        sampling.run_shots(inst, plan, args.shots, args.seed, workers=args.workers)
        dt = time.perf_counter() - t0
        print(f"{'10x10':>8} {dt:>10.3f} {args.shots / dt:>12.0f}")


if __name__ == "__main__":
    main()
