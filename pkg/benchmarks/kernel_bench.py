"""Timing comparison between the compiled and plain-numpy kernel paths.

Usage:
    python benchmarks/kernel_bench.py [--frames N] [--dim D] [--repeats R]

Set FRAMEAGENT_NO_NUMBA=1 to confirm the fallback path stands alone.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from frameagent import kernels


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=20_000)
    parser.add_argument("--dim", type=int, default=512)
    parser.add_argument("--queries", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    emb = rng.standard_normal((args.frames, args.dim))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    emb = emb.astype(np.float32)
    queries = rng.standard_normal((args.queries, args.dim))

    print(f"frames={args.frames} dim={args.dim} queries={args.queries} "
          f"repeats={args.repeats} numba={'yes' if kernels.HAS_NUMBA else 'no'}")

    def numpy_argmax():
        return [kernels.argmax_dot_numpy(emb, q, 0, args.frames) for q in queries]

    reference = numpy_argmax()
    numpy_argmax_t = best_of(numpy_argmax, args.repeats) / args.queries
    print(f"argmax_dot numpy    {numpy_argmax_t * 1e6:10.1f} us/query")

    if kernels.HAS_NUMBA:
        def jit_argmax():
            return [
                int(kernels._argmax_dot_jit(emb, q, 0, args.frames)) for q in queries
            ]

        if jit_argmax() != reference:
            raise SystemExit("kernel paths disagree on argmax results")
        jit_argmax_t = best_of(jit_argmax, args.repeats) / args.queries
        print(f"argmax_dot numba    {jit_argmax_t * 1e6:10.1f} us/query "
              f"({numpy_argmax_t / jit_argmax_t:.2f}x)")

    numpy_norms_t = best_of(lambda: kernels.row_norms_numpy(emb), args.repeats)
    print(f"row_norms  numpy    {numpy_norms_t * 1e3:10.2f} ms/pass")

    if kernels.HAS_NUMBA:
        if not np.allclose(kernels._row_norms_jit(emb), kernels.row_norms_numpy(emb)):
            raise SystemExit("kernel paths disagree on row norms")
        jit_norms_t = best_of(lambda: kernels._row_norms_jit(emb), args.repeats)
        print(f"row_norms  numba    {jit_norms_t * 1e3:10.2f} ms/pass "
              f"({numpy_norms_t / jit_norms_t:.2f}x)")


if __name__ == "__main__":
    main()
