"""Worst S-matrix identity residual and wall time per ODE method on random slabs.

    python3 scripts/integrator_comparison.py --slabs 10 --count 41
"""
import argparse
import time

import numpy as np

import bdgsoliton.direct_scattering as ds
from bdgsoliton.scattering_data import Symmetry


def run(method, slabs, count):
    ds.METHOD = method
    rng = np.random.default_rng(303)
    classes = list(Symmetry)
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(slabs):
        slab = ds.random_smooth_slab(2, rng, classes[i % 3])
        scan = ds.reflection_scan(slab, ds.s_grid(count=count))
        worst = max(worst, max(scan.max_residual(k) for k in ("det", "sigma3", "flux", "r_symmetry", "tau")))
    return worst, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--slabs", type=int, default=10)
    ap.add_argument("--count", type=int, default=41)
    ap.add_argument("--methods", nargs="+", default=["RK45", "DOP853"])
    args = ap.parse_args()
    for method in args.methods:
        worst, dt = run(method, args.slabs, args.count)
        print(f"{method:>8}: worst identity residual {worst:.2e}, {dt:.1f} s")


if __name__ == "__main__":
    main()
