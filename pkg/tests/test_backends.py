"""Parity between the numpy kernels and the compiled extension.

The two backends use different reduction orders, so comparisons are at
1e-12 tolerances rather than bit-exact; determinism within a backend is
covered by the trainer tests.
"""

import numpy as np
import pytest

from disrank import backend
from disrank.backend import kernels_np
from disrank.nn import RegressionNet, mse_loss_grad
from disrank.rng import SplitMix64

cython_kernels = pytest.importorskip(
    "disrank.backend._kernels", reason="compiled kernels not built"
)


def close(a, b):
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14), np.max(np.abs(a - b))


def random_block(rng, rows=16, in_w=12, out_w=7, with_mask=True):
    x = rng.standard_normal((rows, in_w))
    w = rng.standard_normal((out_w, in_w)) * 0.3
    b = rng.standard_normal(out_w) * 0.1
    gamma = rng.uniform(0.5, 1.5, out_w)
    beta = rng.standard_normal(out_w) * 0.2
    mask = None
    if with_mask:
        mask = (rng.uniform(size=(rows, out_w)) >= 0.3).astype(np.float64)
    return x, w, b, gamma, beta, mask


def test_dense_forward_backward_parity(rng):
    for _ in range(10):
        x = rng.standard_normal((9, 6))
        w = rng.standard_normal((4, 6))
        b = rng.standard_normal(4)
        z_np = kernels_np.dense_forward(x, w, b)
        z_cy = cython_kernels.dense_forward(x, w, b)
        close(z_np, z_cy)
        dz = rng.standard_normal(z_np.shape)
        for got, want in zip(
            cython_kernels.dense_backward(dz, x, w),
            kernels_np.dense_backward(dz, x, w),
        ):
            close(got, want)


@pytest.mark.parametrize("with_mask", [True, False])
def test_block_forward_train_parity(rng, with_mask):
    for _ in range(10):
        x, w, b, gamma, beta, mask = random_block(rng, with_mask=with_mask)
        inv_keep = 1.0 / 0.7 if with_mask else 1.0
        got = cython_kernels.block_forward_train(x, w, b, gamma, beta, 1e-5, mask, inv_keep)
        want = kernels_np.block_forward_train(x, w, b, gamma, beta, 1e-5, mask, inv_keep)
        for g, w_ in zip(got, want):
            close(g, w_)


def test_block_forward_eval_parity(rng):
    for _ in range(10):
        x, w, b, gamma, beta, _ = random_block(rng, with_mask=False)
        rmean = rng.standard_normal(w.shape[0]) * 0.1
        rvar = rng.uniform(0.5, 2.0, w.shape[0])
        got = cython_kernels.block_forward_eval(x, w, b, gamma, beta, rmean, rvar, 1e-5)
        want = kernels_np.block_forward_eval(x, w, b, gamma, beta, rmean, rvar, 1e-5)
        close(got, want)


@pytest.mark.parametrize("with_mask", [True, False])
def test_block_backward_parity(rng, with_mask):
    for _ in range(10):
        x, w, b, gamma, beta, mask = random_block(rng, with_mask=with_mask)
        inv_keep = 1.0 / 0.7 if with_mask else 1.0
        _, xhat, istd, _, _, bn = kernels_np.block_forward_train(
            x, w, b, gamma, beta, 1e-5, mask, inv_keep
        )
        dout = rng.standard_normal(bn.shape)
        got = cython_kernels.block_backward(dout, x, w, gamma, xhat, istd, bn, mask, inv_keep)
        want = kernels_np.block_backward(dout, x, w, gamma, xhat, istd, bn, mask, inv_keep)
        for g, w_ in zip(got, want):
            close(g, w_)


def test_whole_net_parity(rng):
    x = rng.standard_normal((8, 10))
    y = rng.standard_normal(8)
    outputs = {}
    for name in ("numpy", "cython"):
        backend.use(name)
        try:
            net = RegressionNet.create((10, 6, 4), seed=13, dropout_p=0.3)
            masks = [
                (SplitMix64(5).uniform((8, 6)) >= 0.3).astype(np.float64),
                (SplitMix64(6).uniform((8, 4)) >= 0.3).astype(np.float64),
            ]
            pred, cache = net.forward(x, dropout_masks=masks)
            grads = net.backward(cache, mse_loss_grad(pred, y))
            net.eval_mode()
            eval_pred, _ = net.forward(x)
            outputs[name] = (pred, grads, eval_pred)
        finally:
            backend.use("auto")
    close(outputs["numpy"][0], outputs["cython"][0])
    close(outputs["numpy"][2], outputs["cython"][2])
    for key in outputs["numpy"][1]:
        close(outputs["numpy"][1][key], outputs["cython"][1][key])


def test_gradient_check_on_cython_backend(rng):
    from test_nn import frozen_masks, numerical_gradients

    backend.use("cython")
    try:
        net = RegressionNet.create((8, 4, 3, 2), seed=5, dropout_p=0.3)
        x = rng.standard_normal((6, 8))
        y = rng.standard_normal(6)
        masks = frozen_masks(net, 6, 0.3)
        pred, cache = net.forward(x, dropout_masks=masks)
        analytic = net.backward(cache, mse_loss_grad(pred, y))
        numeric = numerical_gradients(net, x, y, masks)
        for name in analytic:
            err = np.abs(analytic[name] - numeric[name]) / np.maximum(
                1.0, np.abs(numeric[name])
            )
            assert np.max(err) < 1e-6, f"{name}: {np.max(err):.3e}"
    finally:
        backend.use("auto")


def test_backend_env_and_use():
    assert set(backend.available()) >= {"numpy"}
    backend.use("numpy")
    assert backend.active() == "numpy"
    backend.use("auto")
    assert backend.active() == "cython"


def test_backend_env_var_forces_numpy():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from disrank import backend; print(backend.active())"],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "DISRANK_BACKEND": "numpy"},
    )
    assert out.stdout.strip() == "numpy"
