"""Compare the compiled and pure-Python eigenvalue kernels.

Usage: python benchmarks/bench_eig.py [--sizes 4 8 16 32] [--reps 50]
"""

import argparse
import time

import numpy as np

from krein_canon import eigen


def _time(fn, mats):
    t0 = time.perf_counter()
    for a in mats:
        fn(a)
    return (time.perf_counter() - t0) / len(mats)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    has_ext = eigen._ext is not None
    print(f"{'n':>4} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max |diff|':>11}")
    for n in args.sizes:
        mats = [rng.standard_normal((n, n)) for _ in range(args.reps)]
        tp = _time(lambda a: eigen.eigvals(a, backend="python"), mats)
        if has_ext:
            tc = _time(lambda a: eigen.eigvals(a, backend="cython"), mats)
            diff = max(
                np.abs(np.sort_complex(eigen.eigvals(a, "python")) - np.sort_complex(eigen.eigvals(a, "cython"))).max()
                for a in mats[:5]
            )
            print(f"{n:>4} {1e3 * tp:>12.3f} {1e3 * tc:>12.3f} {tp / tc:>8.1f} {diff:>11.2e}")
        else:
            print(f"{n:>4} {1e3 * tp:>12.3f} {'n/a':>12} {'n/a':>8} {'n/a':>11}")


if __name__ == "__main__":
    main()
