"""Kernel backend selection: compiled extension when available, numpy otherwise.

The environment variable ``DISRANK_BACKEND`` forces a choice: ``cython``
(error if the extension was not built), ``numpy``, or ``auto`` (default).
``use()`` switches at runtime, which the benchmark and parity tests rely on.
"""

import os

from ..errors import ConfigError
from . import kernels_np

_BACKENDS = {"numpy": kernels_np}

try:
    from . import _kernels

    _BACKENDS["cython"] = _kernels
except ImportError:
    _kernels = None

_active_name = "numpy"
_active = kernels_np


def available():
    return sorted(_BACKENDS)


def active() -> str:
    return _active_name


def use(name: str) -> str:
    """Select a backend by name ('auto' picks the fastest available)."""
    global _active, _active_name
    if name == "auto":
        name = "cython" if "cython" in _BACKENDS else "numpy"
    if name in ("python",):
        name = "numpy"
    if name not in _BACKENDS:
        raise ConfigError(
            f"backend {name!r} not available (have: {', '.join(available())})"
        )
    _active_name = name
    _active = _BACKENDS[name]
    return name


def dense_forward(x, w, b):
    return _active.dense_forward(x, w, b)


def dense_backward(d_z, x, w):
    return _active.dense_backward(d_z, x, w)


def block_forward_train(x, w, b, gamma, beta, eps, keep_mask, inv_keep):
    return _active.block_forward_train(x, w, b, gamma, beta, eps, keep_mask, inv_keep)


def block_forward_eval(x, w, b, gamma, beta, running_mean, running_var, eps):
    return _active.block_forward_eval(
        x, w, b, gamma, beta, running_mean, running_var, eps
    )


def block_backward(d_out, x, w, gamma, xhat, inv_std, bn, keep_mask, inv_keep):
    return _active.block_backward(
        d_out, x, w, gamma, xhat, inv_std, bn, keep_mask, inv_keep
    )


use(os.environ.get("DISRANK_BACKEND", "auto"))
