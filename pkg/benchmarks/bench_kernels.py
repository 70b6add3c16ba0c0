"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeat 5]

Prints one CSV row per (kernel, n): best-of-repeat seconds for each backend
and the speed-up. The numba timings exclude the first (compiling) call.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from stwave import kernels


def spd_band(n: int, bw: int = 1) -> np.ndarray:
    """Upper-band storage of a diagonally dominant SPD matrix."""
    ab = np.zeros((bw + 1, n))
    ab[0] = 2.0 * bw + 2.0
    ab[1:] = -1.0
    return ab


def lower_band(n: int) -> np.ndarray:
    """Rows of a lower-triangular bandwidth-2 matrix like the temporal PG matrix."""
    ab = np.empty((3, n))
    ab[0], ab[1], ab[2] = 1.0, -2.0, 1.0
    return ab


def cases(n: int):
    ab = spd_band(n)
    L, _ = kernels.banded_cholesky_numpy(ab)
    b = np.random.default_rng(0).standard_normal(n)
    lb = lower_band(n) * np.array([[2.0], [0.1], [0.1]])
    return {
        "banded_cholesky": ((kernels.banded_cholesky_numba, kernels.banded_cholesky_numpy), (ab,)),
        "banded_cholesky_solve": ((kernels.banded_cholesky_solve_numba, kernels.banded_cholesky_solve_numpy), (L, b)),
        "lower_banded_solve": ((kernels.lower_banded_solve_numba, kernels.lower_banded_solve_numpy), (lb, b)),
    }


def best(func, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: func(*args), number=1, repeat=repeat))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="1000,10000,100000")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if kernels.numba is None:
        print("numba is not installed; only the numpy fallback is available", file=sys.stderr)
        return 1
    print("kernel,n,numba_s,numpy_s,speedup")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, ((fast, slow), fargs) in cases(n).items():
            fast(*fargs)  # compile
            np.testing.assert_allclose(fast(*fargs)[0], slow(*fargs)[0], rtol=1e-12, atol=1e-12)
            t_fast, t_slow = best(fast, fargs, args.repeat), best(slow, fargs, args.repeat)
            print(f"{name},{n},{t_fast:.3e},{t_slow:.3e},{t_slow / t_fast:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
