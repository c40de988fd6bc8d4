"""Compare the numba and pure-numpy harmonic kernels.

    python benchmarks/bench_kernels.py [--lmax 32] [--points 20000] [--repeat 5]

Both variants are timed in the same process (the ``use_numba`` argument
bypasses the LIGHTCONE_NUMBA switch) and checked against each other.
"""

import argparse
import time

import numpy as np

from lightcone._accel import numba
from lightcone.kernels import legendre_table, sh_point_derivs
from lightcone.sphere import random_points


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lmax", type=int, default=32)
    p.add_argument("--points", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    X = random_points(2, args.points, rng)
    coeffs = rng.normal(size=(args.lmax + 1) ** 2)
    z = np.cos(np.linspace(0.0, np.pi, 4 * args.lmax))

    cases = {
        "legendre_table": lambda nb: legendre_table(args.lmax, z, use_numba=nb),
        "sh_point_derivs": lambda nb: sh_point_derivs(coeffs, args.lmax, X, use_numba=nb),
    }
    print(f"lmax={args.lmax} points={args.points} numba={'yes' if numba else 'missing'}")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'rel diff':>12}")
    for name, fn in cases.items():
        ref = fn(False)
        t_np = best_of(lambda: fn(False), args.repeat)
        if numba is None:
            print(f"{name:<18}{1e3 * t_np:12.2f}{'-':>12}{'-':>10}{'-':>12}")
            continue
        out = fn(True)  # compile outside the timing
        t_nb = best_of(lambda: fn(True), args.repeat)
        ref = ref if isinstance(ref, tuple) else (ref,)
        out = out if isinstance(out, tuple) else (out,)
        diff = max(float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a)))) for a, b in zip(ref, out))
        print(f"{name:<18}{1e3 * t_np:12.2f}{1e3 * t_nb:12.2f}{t_np / t_nb:10.1f}{diff:12.1e}")


if __name__ == "__main__":
    main()
