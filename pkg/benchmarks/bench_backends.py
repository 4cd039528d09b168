"""Compare the numba kernels with their numpy fallbacks.

Run with ``python benchmarks/bench_backends.py``; both paths are imported in
one process, so the BETACOAL_BACKEND flag does not matter here.
"""

import argparse
import time

import numpy as np

from betacoal import laplace as lp
from betacoal.kernels import chain, recursion
from betacoal.rates import RateContext
from betacoal.simulator import _chain_tables


def best_of(fn, repeat):
    fn()  # warm up (and compile)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_recursion(n, repeat):
    rates = RateContext((1.5, 1.0), n_max=n)
    gb, ga, row_norm = rates.tables(n)
    log_disc = lp.Functional.constant(-1.0).log_discount(rates, n)
    out = {}
    for name, fn in (("numba", recursion.laplace_log_series_numba),
                     ("numpy", recursion.laplace_log_series_numpy)):
        out[name] = best_of(lambda: fn(gb, ga, row_norm, log_disc, n, 0), repeat)
    a = recursion.laplace_log_series_numba(gb, ga, row_norm, log_disc, n, 0)
    b = recursion.laplace_log_series_numpy(gb, ga, row_norm, log_disc, n, 0)
    return out, float(np.nanmax(np.abs(a - b)))


def bench_chain(n0, reps, repeat):
    lam, q2, cum, off, limit = _chain_tables(1.5, 1.0, n0, n0)
    psi = np.full(n0 + 1, -1.0)
    levels = np.array([3], dtype=np.int64)
    args = (n0, np.uint64(42), np.uint64(0), reps, lam, psi, q2, 1.5, 1.0, cum, off, limit, levels)
    out = {}
    for name, fn in (("numba", chain.simulate_batch_numba), ("numpy", chain.simulate_batch_numpy)):
        out[name] = best_of(lambda: fn(*args), repeat)
    same = np.array_equal(chain.simulate_batch_numba(*args)[3], chain.simulate_batch_numpy(*args)[3])
    return out, same


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2000, help="recursion length")
    p.add_argument("--n0", type=int, default=500, help="chain start state")
    p.add_argument("--reps", type=int, default=20000, help="chain replicates")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    t, diff = bench_recursion(args.n, args.repeat)
    print(f"laplace recursion N={args.n}: numba {t['numba']:.4f}s  numpy {t['numpy']:.4f}s  "
          f"speedup {t['numpy'] / t['numba']:.1f}x  max |diff| {diff:.2e}")
    t, same = bench_chain(args.n0, args.reps, args.repeat)
    print(f"chain n0={args.n0} R={args.reps}: numba {t['numba']:.4f}s  numpy {t['numpy']:.4f}s  "
          f"speedup {t['numpy'] / t['numba']:.1f}x  identical jump counts {same}")


if __name__ == "__main__":
    main()
