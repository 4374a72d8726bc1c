"""Numpy reference kernels for the regression net's hot path.

These are the fallback implementations behind the compiled extension in
``_kernels.pyx``; both expose the same functions and must agree numerically
(the compiled kernels may differ in the last few ulps because reduction
order differs). Shapes: batches are (B, features) row-major float64, dense
weights are (out, in).
"""

import numpy as np


def dense_forward(x, w, b):
    """z = x @ w.T + b"""
    return x @ w.T + b


def dense_backward(d_z, x, w):
    """Returns (d_x, d_w, d_b) for z = x @ w.T + b."""
    return d_z @ w, d_z.T @ x, d_z.sum(axis=0)


def block_forward_train(x, w, b, gamma, beta, eps, keep_mask, inv_keep):
    """Dense -> batchnorm (batch statistics) -> ReLU -> inverted dropout.

    ``keep_mask`` is a float64 0/1 array or None (no dropout); kept units are
    scaled by ``inv_keep`` = 1/(1-p). Returns the block output plus the
    intermediates the backward pass needs, and the biased batch statistics
    the caller folds into the running averages.
    """
    z = x @ w.T + b
    mu = z.mean(axis=0)
    centered = z - mu
    var = np.mean(centered * centered, axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    bn = gamma * xhat + beta
    out = np.maximum(bn, 0.0)
    if keep_mask is not None:
        out = out * keep_mask * inv_keep
    return out, xhat, inv_std, mu, var, bn


def block_forward_eval(x, w, b, gamma, beta, running_mean, running_var, eps):
    """Same block with running statistics and dropout as identity."""
    z = x @ w.T + b
    bn = gamma * ((z - running_mean) / np.sqrt(running_var + eps)) + beta
    return np.maximum(bn, 0.0)


def block_backward(d_out, x, w, gamma, xhat, inv_std, bn, keep_mask, inv_keep):
    """Reverse the training-mode block.

    Batchnorm backward uses the batch-statistics chain rule for the biased
    (divide by B) variance used in the forward pass.
    """
    if keep_mask is not None:
        d_out = d_out * keep_mask * inv_keep
    d_bn = d_out * (bn > 0.0)
    d_gamma = (d_bn * xhat).sum(axis=0)
    d_beta = d_bn.sum(axis=0)
    d_xhat = d_bn * gamma
    n = d_bn.shape[0]
    d_z = (inv_std / n) * (
        n * d_xhat - d_xhat.sum(axis=0) - xhat * (d_xhat * xhat).sum(axis=0)
    )
    d_x = d_z @ w
    d_w = d_z.T @ x
    d_b = d_z.sum(axis=0)
    return d_x, d_w, d_b, d_gamma, d_beta
