"""Timing comparison of the compiled kernels against their numpy forms.

Runs the three hot operations (sparse row sweep, TV value, TV
subgradient) at a chosen geometry and reports best-of-N wall times plus
the speedup. The first compiled call is a warmup so jit compilation
does not pollute the numbers.

Usage:
    python3 benchmarks/bench_kernels.py --size 64 --repeats 7
"""

import argparse
import time

import numpy as np

from sais import kernels
from sais.radon import build_radon


def best_time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="benchmark compiled vs plain-numpy kernels")
    parser.add_argument("--size", type=int, default=64,
                        help="image side length in pixels")
    parser.add_argument("--views", type=int, default=24)
    parser.add_argument("--bins", type=int, default=None,
                        help="detector bins (default: --size)")
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    bins = args.bins if args.bins is not None else args.size

    if not kernels.NUMBA_ENABLED:
        parser.error("compiled kernels are unavailable "
                     "(numba missing or SAIS_DISABLE_NUMBA set)")

    rng = np.random.default_rng(args.seed)
    op = build_radon(args.size, args.size, args.views, bins)
    x0 = rng.random(op.shape[1])
    b = rng.random(op.shape[0])
    order = rng.permutation(op.shape[0]).astype(np.int64)
    img = rng.random((args.size, args.size))
    lam = 1e-3

    print(f"geometry: {args.size}x{args.size} image, {args.views} views, "
          f"{bins} bins, {op.shape[0]} rows, {op.nnz} nonzeros")

    def sweep(fn):
        x = x0.copy()
        fn(x, op.indptr, op.indices, op.data, b, order, lam)
        return x

    # warmup triggers compilation and fills caches for both paths
    ref = sweep(kernels.l1_string_pass_numpy)
    jit = sweep(kernels.l1_string_pass_numba)
    kernels.tv_value_numpy(img), kernels.tv_value_numba(img)
    kernels.tv_subgradient_numpy(img), kernels.tv_subgradient_numba(img)
    gap = float(np.max(np.abs(ref - jit)))
    print(f"row sweep agreement (max abs gap): {gap:.3e}")

    cases = [
        ("l1 row sweep",
         lambda: sweep(kernels.l1_string_pass_numpy),
         lambda: sweep(kernels.l1_string_pass_numba)),
        ("tv value",
         lambda: kernels.tv_value_numpy(img),
         lambda: kernels.tv_value_numba(img)),
        ("tv subgradient",
         lambda: kernels.tv_subgradient_numpy(img),
         lambda: kernels.tv_subgradient_numba(img)),
    ]

    print(f"{'kernel':<16}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, plain, compiled in cases:
        t_plain = best_time(plain, args.repeats)
        t_jit = best_time(compiled, args.repeats)
        print(f"{name:<16}{1e3 * t_plain:>12.3f}{1e3 * t_jit:>12.3f}"
              f"{t_plain / t_jit:>10.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
