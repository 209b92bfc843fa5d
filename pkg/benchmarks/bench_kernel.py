"""Benchmark the compiled Dormand-Prince kernel against the pure-Python
fallback on identical workloads.

Run:  python3 benchmarks/bench_kernel.py [--iterates N] [--lam L]
"""

import argparse
import time

from impulseduff import (ImpulseSchedule, PoincarePoint, SystemConfig,
                         TrigPoly, compute_special_functions, iterate_map)
from impulseduff._kernel import (BACKEND, integrate_segment,
                                 integrate_segment_py)


def forced_config():
    return SystemConfig(
        n=1,
        coefficients=(TrigPoly(0.0, ((0.01, 0.0),)),
                      TrigPoly(0.0, ()),
                      TrigPoly(0.0, ())),
        schedule=ImpulseSchedule(0.25, 0.5),
        abs_tol=1e-12, rel_tol=1e-12, max_step=0.25)


def bench_segment(kernel, reps):
    means = (0.01, 0.0, 0.0)
    cosc = ((0.02,), (0.0,), (0.0,))
    sinc = ((0.0,), (0.01,), (0.0,))
    args = (0.0, 1.3, -0.4, 0.0, 0.25, 1, means, cosc, sinc,
            1.0 / 3, 2.0 / 3, 0.07479146898378038,
            1e-12, 1e-12, 0.25, 1e12, 1e-6, True, False)
    t0 = time.perf_counter()
    for _ in range(reps):
        kernel(*args)
    return (time.perf_counter() - t0) / reps


def bench_map(config, sf, lam, iterates, force_py):
    import impulseduff.poincare as poincare
    import impulseduff._kernel as kern
    saved = poincare
    # swap the kernel the map uses
    orig = kern.integrate_segment
    kern.integrate_segment = (kern.integrate_segment_py if force_py
                              else orig)
    try:
        t0 = time.perf_counter()
        iterate_map(config, sf, PoincarePoint(lam, 0.1), iterates)
        return (time.perf_counter() - t0) / iterates
    finally:
        kern.integrate_segment = orig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iterates", type=int, default=500)
    ap.add_argument("--lam", type=float, default=100.0)
    ap.add_argument("--segment-reps", type=int, default=2000)
    args = ap.parse_args()

    print("active backend: %s" % BACKEND)
    tp = bench_segment(integrate_segment_py, max(args.segment_reps // 20, 10))
    print("segment, python  : %8.3f ms" % (tp * 1e3))
    if BACKEND == "cython":
        tc = bench_segment(integrate_segment, args.segment_reps)
        print("segment, cython  : %8.3f ms   (%.1fx)" % (tc * 1e3, tp / tc))

    config = forced_config()
    sf = compute_special_functions(config.n)
    mp = bench_map(config, sf, args.lam, max(args.iterates // 20, 10), True)
    print("map iterate, python: %8.3f ms" % (mp * 1e3))
    if BACKEND == "cython":
        mc = bench_map(config, sf, args.lam, args.iterates, False)
        print("map iterate, cython: %8.3f ms   (%.1fx)" % (mc * 1e3, mp / mc))


if __name__ == "__main__":
    main()
