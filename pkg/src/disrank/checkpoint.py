"""NNCK checkpoint container for nets, run manifests and optimizer state.

Layout, little-endian throughout:

* magic ``NNCK`` (4 bytes), version u16 = 1
* manifest length u32, then that many bytes of UTF-8 ``key=value`` lines
  (sorted by key, so identical manifests serialize identically)
* all parameters and running statistics as float64, in deterministic order:
  per block weights (row-major), bias, gamma, beta, running_mean,
  running_var; then head weights, bias
* optionally a section tag ``OPTM``: step count u64, then the optimizer's
  first- and second-moment buffers in the same parameter order, enabling
  resume

The manifest must carry at least the keys needed to rebuild the net shape:
``widths``, ``dropout_p``, ``bn_epsilon``, ``bn_momentum``; ``save_checkpoint``
fills them in from the net (and errors on contradictions).
"""

import struct

import numpy as np

from .errors import FormatError, ValidationError
from .nn import RegressionNet
from .optim import AdamWState

MAGIC = b"NNCK"
VERSION = 1
OPTIM_TAG = b"OPTM"
_HEAD = struct.Struct("<4sH")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")

_ARCH_KEYS = ("widths", "dropout_p", "bn_epsilon", "bn_momentum")


def _net_arrays(net):
    """Checkpoint array order: parameters interleaved with running stats."""
    arrays = []
    for i, blk in enumerate(net.blocks):
        arrays += [
            (f"block{i}.weights", blk.dense.weights),
            (f"block{i}.bias", blk.dense.bias),
            (f"block{i}.gamma", blk.bn.gamma),
            (f"block{i}.beta", blk.bn.beta),
            (f"block{i}.running_mean", blk.bn.running_mean),
            (f"block{i}.running_var", blk.bn.running_var),
        ]
    arrays += [("head.weights", net.head.weights), ("head.bias", net.head.bias)]
    return arrays


def _arch_manifest(net):
    blk0 = net.blocks[0]
    return {
        "widths": ",".join(str(w) for w in net.widths) + ",1",
        "dropout_p": repr(blk0.dropout.p),
        "bn_epsilon": repr(blk0.bn.epsilon),
        "bn_momentum": repr(blk0.bn.momentum),
    }


def save_checkpoint(path, net, manifest=None, optim_state: AdamWState = None):
    """Serialize a net (and optionally optimizer state) with its manifest."""
    manifest = dict(manifest or {})
    for key, value in _arch_manifest(net).items():
        if key in manifest and manifest[key] != value:
            raise ValidationError(
                f"manifest key {key}={manifest[key]!r} contradicts the net ({value!r})"
            )
        manifest[key] = value
    lines = "".join(f"{k}={manifest[k]}\n" for k in sorted(manifest))
    blob = lines.encode("utf-8")

    with open(path, "wb") as f:
        f.write(_HEAD.pack(MAGIC, VERSION))
        f.write(_U32.pack(len(blob)))
        f.write(blob)
        for _, arr in _net_arrays(net):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        if optim_state is not None:
            f.write(OPTIM_TAG)
            f.write(_U64.pack(optim_state.step_count))
            for buffers in (optim_state.m, optim_state.v):
                for name, _ in _net_arrays(net):
                    if name in buffers:
                        f.write(
                            np.ascontiguousarray(buffers[name], dtype="<f8").tobytes()
                        )


def load_checkpoint(path):
    """Read an NNCK file; returns (net, manifest, optim_state_or_None).

    The net comes back in eval mode. Corruption and truncation raise
    FormatError with the byte offset; a valid prefix is never silently
    accepted as a whole file.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEAD.size + _U32.size:
        raise FormatError("file shorter than header", path, offset=len(blob))
    magic, version = _HEAD.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", path, offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", path, offset=4)
    (manifest_len,) = _U32.unpack_from(blob, _HEAD.size)
    offset = _HEAD.size + _U32.size
    if offset + manifest_len > len(blob):
        raise FormatError("truncated manifest", path, offset=offset)
    manifest = {}
    for line in blob[offset : offset + manifest_len].decode("utf-8").splitlines():
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"bad manifest line {line!r}", path, offset=offset)
        manifest[key] = value
    offset += manifest_len

    for key in _ARCH_KEYS:
        if key not in manifest:
            raise FormatError(f"manifest missing key {key!r}", path, offset=offset)
    try:
        widths = tuple(int(w) for w in manifest["widths"].split(","))
        dropout_p = float(manifest["dropout_p"])
        bn_epsilon = float(manifest["bn_epsilon"])
        bn_momentum = float(manifest["bn_momentum"])
    except ValueError as e:
        raise FormatError(f"bad manifest value: {e}", path, offset=offset)
    if len(widths) < 3 or widths[-1] != 1:
        raise FormatError(f"bad widths {manifest['widths']!r}", path, offset=offset)

    net = RegressionNet.create(
        widths=widths[:-1],
        seed=0,
        dropout_p=dropout_p,
        bn_momentum=bn_momentum,
        bn_epsilon=bn_epsilon,
    )

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(blob):
            raise FormatError("truncated parameter data", path, offset=offset)
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        offset = end
        return arr.reshape(shape).copy()

    for _, arr in _net_arrays(net):
        arr[...] = take(arr.shape)

    optim_state = None
    if offset < len(blob):
        if blob[offset : offset + 4] != OPTIM_TAG:
            raise FormatError("unexpected trailing bytes", path, offset=offset)
        offset += 4
        if offset + 8 > len(blob):
            raise FormatError("truncated optimizer section", path, offset=offset)
        (step_count,) = _U64.unpack_from(blob, offset)
        offset += 8
        params = net.parameters()
        m = {name: take(arr.shape) for name, arr in params.items()}
        v = {name: take(arr.shape) for name, arr in params.items()}
        optim_state = AdamWState(
            step_count=step_count, m=m, v=v, learning_rate=0.0
        )
        if offset != len(blob):
            raise FormatError(
                f"{len(blob) - offset} trailing bytes", path, offset=offset
            )
    net.eval_mode()
    return net, manifest, optim_state
