"""Benchmark the compiled conv kernels against the numpy fallback.

Times im2col/col2im and the full conv2d forward/backward at the shapes the
training loops actually use. Run with:

    python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from toolpath_rl.nn import kernels, kernels_np

try:
    from toolpath_rl.nn import _convkernels as kernels_cy
except ImportError:
    kernels_cy = None


CASES = [
    # (label, n, h, c_in, c_out, stride)
    ("dqn batch 12x12", 64, 12, 2, 16, 2),
    ("dqn batch 6x6", 64, 6, 16, 32, 2),
    ("ppo minibatch 12x12", 512, 12, 2, 16, 2),
    ("eval single 32x32", 1, 32, 1, 16, 2),
]


def _time(fn, repeats: int) -> float:
    fn()  # warm-up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3  # ms


def bench_impl(impl, n, h, c_in, c_out, stride, repeats):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, h, h, c_in)).astype(np.float32)
    ho = kernels.out_size(h, 3, stride, 1)
    gcols = rng.standard_normal((n * ho * ho, 9 * c_in)).astype(np.float32)
    t_im2col = _time(lambda: impl.im2col(x, 3, 3, stride, 1), repeats)
    t_col2im = _time(
        lambda: impl.col2im(gcols, n, h, h, c_in, 3, 3, stride, 1), repeats
    )
    return t_im2col, t_col2im


def bench_full(n, h, c_in, c_out, stride, repeats):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, h, h, c_in)).astype(np.float32)
    w = rng.standard_normal((c_out, c_in, 3, 3)).astype(np.float32)
    b = np.zeros(c_out, dtype=np.float32)
    y = kernels.conv2d_forward(x, w, b, stride, 1)
    gy = np.ones_like(y)
    t_fwd = _time(lambda: kernels.conv2d_forward(x, w, b, stride, 1), repeats)
    t_bwd = _time(lambda: kernels.conv2d_backward(x, w, gy, stride, 1), repeats)
    return t_fwd, t_bwd


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    impls = [("numpy", kernels_np)]
    if kernels_cy is not None:
        impls.append(("cython", kernels_cy))
    else:
        print("compiled extension not available; benchmarking numpy only")
    print(f"active backend: {kernels.BACKEND}\n")

    header = f"{'case':24s} {'kernel':8s}" + "".join(
        f" {name + ' (ms)':>14s}" for name, _ in impls
    )
    if len(impls) == 2:
        header += f" {'speedup':>9s}"
    print(header)
    for label, n, h, c_in, c_out, stride in CASES:
        rows = {"im2col": [], "col2im": []}
        for _, impl in impls:
            t1, t2 = bench_impl(impl, n, h, c_in, c_out, stride, args.repeats)
            rows["im2col"].append(t1)
            rows["col2im"].append(t2)
        for kernel, times in rows.items():
            line = f"{label:24s} {kernel:8s}" + "".join(f" {t:14.3f}" for t in times)
            if len(times) == 2:
                line += f" {times[0] / times[1]:8.1f}x"
            print(line)
        t_fwd, t_bwd = bench_full(n, h, c_in, c_out, stride, args.repeats)
        print(f"{label:24s} {'conv fwd/bwd (active backend)':30s} "
              f"{t_fwd:8.3f} / {t_bwd:8.3f} ms")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
