#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Usage: python benchmarks/bench_backends.py [--quick]

The kernels are imported directly from both implementation modules, so this
does not depend on (or change) the NGCA_LAB_BACKEND selection of the calling
environment.  First numba calls include JIT compilation; a warmup pass is
timed out separately.
"""

import argparse
import time

import numpy as np

from ngca_lab import _kernels_np
from ngca_lab.hermite import _cached_index_counts

try:
    from ngca_lab import _kernels_nb
except ImportError:
    _kernels_nb = None


def timeit(fn, *args, repeats=5):
    fn(*args)  # warmup / JIT
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()
    scale = 10 if args.quick else 1

    rng = np.random.default_rng(0)
    cases = []

    t = rng.standard_normal(2_000_000 // scale)
    cases.append(("he_batch k=40, 2e6 pts", lambda K: K.he_batch(40, t)))
    cases.append(("h_table k=200, 2e5 pts",
                  lambda K, tt=t[:200_000 // scale]: K.h_table(200, tt)))

    u = rng.standard_normal(4_000_000 // scale) * 2.0
    cases.append(("clipped He3, 4e6 pts", lambda K: K.clipped_he_batch(3, u, 6.0)))

    m, k = 3, 4
    counts, norms = _cached_index_counts(m, k)
    coeffs = rng.standard_normal(m**k)
    x = rng.standard_normal((400_000 // scale, m))
    cases.append((f"sym_inner m={m} k={k}, 4e5 pts",
                  lambda K: K.sym_inner_batch(coeffs, counts, norms, x, k)))

    print(f"{'kernel':36s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, runner in cases:
        t_np = timeit(runner, _kernels_np)
        if _kernels_nb is None:
            print(f"{name:36s} {t_np * 1e3:9.2f}ms {'n/a':>10s}")
            continue
        t_nb = timeit(runner, _kernels_nb)
        ref = np.asarray(runner(_kernels_np))
        got = np.asarray(runner(_kernels_nb))
        assert np.allclose(ref, got, rtol=1e-12, atol=1e-12), f"mismatch in {name}"
        print(f"{name:36s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms {t_np / t_nb:7.2f}x")


if __name__ == "__main__":
    main()
