"""Benchmark the compiled transform kernel against the numpy fallback.

Run as ``python -m fflab.benchmark``.  Measures full frequency sweeps on
a ternary-type measure at several sizes, which is the access pattern of
the census and decay pipelines.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import _kernels_py
from .ifs import validate_ifs
from .kernels import HAVE_EXTENSION, build_dag, eval_fourier
from .measure import SelfSimilarMeasure


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(sizes, tol, lam_max, repeats):
    ternary = validate_ifs([("1/3", "0"), ("1/3", "2/3")],
                           ["1/2", "1/2"], ("0", "1"))
    mu = SelfSimilarMeasure(ternary)
    dag = build_dag(mu.ifs, lam_max, tol)
    print(f"measure: ternary, DAG nodes: {dag.node_count}, "
          f"tol: {tol:g}, lam_max: {lam_max:g}")
    print(f"compiled kernel available: {HAVE_EXTENSION}")
    header = f"{'sweep size':>12} {'numpy (s)':>12} {'cython (s)':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(7)
    for size in sizes:
        lams = rng.uniform(0.1, lam_max, size=size)
        t_py = _time(lambda: _kernels_py.eval_batch(
            lams, dag.node_r, dag.children, dag.letter_p, dag.letter_t,
            dag.center, dag.width, dag.tol), repeats)
        if HAVE_EXTENSION:
            t_cy = _time(lambda: eval_fourier(dag, lams), repeats)
            print(f"{size:>12d} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>8.1f}x")
        else:
            print(f"{size:>12d} {t_py:>12.4f} {'-':>12} {'-':>9}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="1000,10000,100000",
                    help="comma-separated sweep sizes")
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--lam-max", type=float, default=4096.0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    run([int(s) for s in args.sizes.split(",")], args.tol, args.lam_max,
        args.repeats)


if __name__ == "__main__":
    main()
