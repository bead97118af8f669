"""Timing comparison of the jitted and pure-numpy convolution kernels.

Run as: python3 benchmarks/bench_kernels.py [--batch 32] [--repeats 200]
Set MOHQA_DISABLE_NUMBA=1 before importing mohqa to force the numpy path
everywhere; this script times both implementations directly regardless.
"""

import argparse
import time

import numpy as np

from mohqa.nn import kernels


def time_fn(fn, *args, repeats: int) -> float:
    fn(*args)  # warm-up (includes jit compilation)
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def bench_case(name, x, w, b, stride, repeats):
    rows = []
    y = kernels._conv2d_forward_numpy(x, w, b, stride)
    gy = np.random.default_rng(0).normal(size=y.shape)
    cases = [
        ("forward numpy", kernels._conv2d_forward_numpy, (x, w, b, stride)),
        ("backward numpy", kernels._conv2d_backward_numpy, (x, w, stride, gy)),
    ]
    if kernels.USE_NUMBA:
        cases += [
            ("forward numba", kernels._conv2d_forward_jit, (x, w, b, stride)),
            ("backward numba", kernels._conv2d_backward_jit, (x, w, stride, gy)),
        ]
    for label, fn, args in cases:
        dt = time_fn(fn, *args, repeats=repeats)
        rows.append(f"  {label:<16} {dt * 1e3:8.3f} ms")
    print(name)
    print("\n".join(rows))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(42)
    print(f"numba path available: {kernels.USE_NUMBA}")

    # the two convolutions of the Q-network body at training batch size
    x1 = rng.normal(size=(args.batch, 1, 12, 12))
    w1 = rng.normal(size=(16, 1, 3, 3))
    bench_case("conv1: 12x12x1 -> 10x10x16, stride 1", x1, w1, np.zeros(16), 1, args.repeats)

    x2 = rng.normal(size=(args.batch, 16, 10, 10))
    w2 = rng.normal(size=(32, 16, 3, 3))
    bench_case("conv2: 10x10x16 -> 4x4x32, stride 2", x2, w2, np.zeros(32), 2, args.repeats)


if __name__ == "__main__":
    main()
