"""Benchmark the numpy kernels against the compiled extension.

Times the dominant training operations at the default architecture
(1536 -> 512 -> 256 -> 128 -> 64 -> 1, batch 32): each block's fused
forward/backward, and a whole train step of the full net.

Usage: python benchmarks/bench_backends.py [--batch 32] [--repeats 50]
"""

import argparse
import time

import numpy as np

from disrank import backend
from disrank.nn import DEFAULT_WIDTHS, RegressionNet, mse_loss_grad
from disrank.rng import SplitMix64


def timeit(fn, repeats):
    fn()  # warmup
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_block(name, batch, in_w, out_w, repeats):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((batch, in_w))
    w = rng.standard_normal((out_w, in_w)) * 0.05
    b = rng.standard_normal(out_w) * 0.1
    gamma = np.ones(out_w)
    beta = np.zeros(out_w)
    mask = (rng.uniform(size=(batch, out_w)) >= 0.3).astype(np.float64)
    inv_keep = 1.0 / 0.7

    def forward_backward():
        out, xhat, istd, mu, var, bn = backend.block_forward_train(
            x, w, b, gamma, beta, 1e-5, mask, inv_keep
        )
        backend.block_backward(out, x, w, gamma, xhat, istd, bn, mask, inv_keep)

    return timeit(forward_backward, repeats)


def bench_train_step(batch, repeats):
    net = RegressionNet.create(DEFAULT_WIDTHS, seed=0)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((batch, DEFAULT_WIDTHS[0]))
    y = rng.standard_normal(batch)
    stream = SplitMix64(3)

    def step():
        net.train_mode()
        pred, cache = net.forward(x, rng=stream)
        net.backward(cache, mse_loss_grad(pred, y))

    return timeit(step, repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    names = backend.available()
    if "cython" not in names:
        print("compiled kernels not built; benchmarking numpy only")

    cases = [("block 1536->512", 1536, 512), ("block 512->256", 512, 256)]
    results = {}
    for backend_name in names:
        backend.use(backend_name)
        timings = {}
        for label, in_w, out_w in cases:
            timings[label] = bench_block(label, args.batch, in_w, out_w, args.repeats)
        timings["full train step"] = bench_train_step(args.batch, args.repeats)
        results[backend_name] = timings
    backend.use("auto")

    labels = [label for label, _, _ in cases] + ["full train step"]
    print(f"{'operation':<20}" + "".join(f"{n:>14}" for n in names) + f"{'speedup':>10}")
    for label in labels:
        row = f"{label:<20}"
        for n in names:
            row += f"{results[n][label] * 1e3:>12.3f}ms"
        if "cython" in results and "numpy" in results:
            row += f"{results['numpy'][label] / results['cython'][label]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
