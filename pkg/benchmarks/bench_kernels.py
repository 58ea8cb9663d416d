"""Timing comparison of the two packed symmetric matvec kernels.

Run as a script:

    python benchmarks/bench_kernels.py [--sizes 100,400,1000] [--repeat 200]

Reports nanoseconds per call for the JIT kernel (when numba is active)
and the pure NumPy fallback, plus the speedup.  The first JIT call is
excluded from timing (compilation).
"""

import argparse
import timeit

import numpy as np

from irmcg import _kernels


def packed_symmetric(rng, n):
    full = rng.standard_normal((n, n))
    full = full + full.T
    ap = np.empty(n * (n + 1) // 2)
    k = 0
    for i in range(n):
        ap[k:k + i + 1] = full[i, : i + 1]
        k += i + 1
    return ap


def time_call(fn, ap, v, repeat):
    fn(ap, v)  # warm up (and JIT-compile on first use)
    total = timeit.timeit(lambda: fn(ap, v), number=repeat)
    return total / repeat


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="100,400,1000")
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = np.random.default_rng(0)
    print("numba active: %s" % _kernels.USING_NUMBA)
    header = "%6s  %14s  %14s  %8s" % ("n", "numpy (us)", "jit (us)", "speedup")
    print(header)
    print("-" * len(header))
    for n in sizes:
        ap = packed_symmetric(rng, n)
        v = rng.standard_normal(n)
        t_numpy = time_call(_kernels.symv_packed_numpy, ap, v, args.repeat)
        if _kernels.USING_NUMBA:
            t_jit = time_call(_kernels.symv_packed_jit, ap, v, args.repeat)
            print(
                "%6d  %14.2f  %14.2f  %7.1fx"
                % (n, t_numpy * 1e6, t_jit * 1e6, t_numpy / t_jit)
            )
        else:
            print("%6d  %14.2f  %14s  %8s" % (n, t_numpy * 1e6, "-", "-"))


if __name__ == "__main__":
    main()
