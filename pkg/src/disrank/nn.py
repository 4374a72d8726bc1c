"""From-scratch deep regression network: forward, reverse-mode gradients, MSE.

Architecture: a stack of blocks (dense -> batchnorm -> ReLU -> inverted
dropout) followed by a single-neuron dense head with no output activation.
The default widths are 1536 -> 512 -> 256 -> 128 -> 64 -> 1; widths and the
number of blocks are configurable so tests can run reduced nets.

Train/eval semantics:

* train mode: batchnorm normalizes with biased batch statistics (divide by
  B) and folds the unbiased variance into the running averages; dropout
  zeroes units and scales the kept ones by 1/(1-p). Requires B >= 2.
* eval mode: batchnorm uses running statistics, dropout is the identity;
  the forward pass is a pure deterministic function of the input.

All math is float64 so gradient checks are meaningful.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import ValidationError
from .rng import SplitMix64

DEFAULT_WIDTHS = (1536, 512, 256, 128, 64)
BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)


@dataclass
class BatchNormLayer:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = BN_MOMENTUM
    epsilon: float = BN_EPSILON


@dataclass
class DropoutLayer:
    p: float = 0.3


@dataclass
class Block:
    dense: DenseLayer
    bn: BatchNormLayer
    dropout: DropoutLayer


@dataclass
class BlockCache:
    x: np.ndarray
    xhat: np.ndarray
    inv_std: np.ndarray
    bn_out: np.ndarray
    keep_mask: np.ndarray  # None when dropout was inactive
    inv_keep: float


@dataclass
class ForwardCache:
    """Intermediates of exactly one train-mode forward pass."""

    blocks: list = field(default_factory=list)
    head_x: np.ndarray = None
    consumed: bool = False


class RegressionNet:
    """Feedforward regression net with explicit train/eval modes."""

    def __init__(self, blocks, head, mode="train"):
        self.blocks = blocks
        self.head = head
        self.mode = mode

    @classmethod
    def create(
        cls,
        widths=DEFAULT_WIDTHS,
        seed=0,
        dropout_p=0.3,
        bn_momentum=BN_MOMENTUM,
        bn_epsilon=BN_EPSILON,
    ):
        """Initialize a net: weights uniform in +-sqrt(6/fan_in), biases zero,
        batchnorm at identity (gamma 1, beta 0, running stats 0/1).

        ``widths`` is (input, hidden1, ..., hiddenK); the head maps the last
        hidden width to one output. Deterministic per seed.
        """
        if len(widths) < 2:
            raise ValidationError("need at least one hidden layer")
        if not 0.0 <= dropout_p < 1.0:
            raise ValidationError(f"dropout p must be in [0, 1), got {dropout_p}")
        rng = SplitMix64(seed)
        blocks = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            blocks.append(
                Block(
                    dense=_init_dense(rng, fan_out, fan_in),
                    bn=BatchNormLayer(
                        gamma=np.ones(fan_out),
                        beta=np.zeros(fan_out),
                        running_mean=np.zeros(fan_out),
                        running_var=np.ones(fan_out),
                        momentum=bn_momentum,
                        epsilon=bn_epsilon,
                    ),
                    dropout=DropoutLayer(dropout_p),
                )
            )
        head = _init_dense(rng, 1, widths[-1])
        return cls(blocks, head)

    @property
    def input_width(self) -> int:
        return self.blocks[0].dense.weights.shape[1]

    @property
    def widths(self):
        return (self.input_width,) + tuple(
            b.dense.weights.shape[0] for b in self.blocks
        )

    def train_mode(self):
        self.mode = "train"
        return self

    def eval_mode(self):
        self.mode = "eval"
        return self

    def parameters(self) -> dict:
        """Trainable parameters as an ordered name -> array map (live views)."""
        params = {}
        for i, blk in enumerate(self.blocks):
            params[f"block{i}.weights"] = blk.dense.weights
            params[f"block{i}.bias"] = blk.dense.bias
            params[f"block{i}.gamma"] = blk.bn.gamma
            params[f"block{i}.beta"] = blk.bn.beta
        params["head.weights"] = self.head.weights
        params["head.bias"] = self.head.bias
        return params

    def no_decay_names(self) -> frozenset:
        """Parameters excluded from weight decay: biases, gamma, beta."""
        return frozenset(
            name
            for name in self.parameters()
            if name.endswith((".bias", ".gamma", ".beta"))
        )

    def running_stats(self) -> dict:
        stats = {}
        for i, blk in enumerate(self.blocks):
            stats[f"block{i}.running_mean"] = blk.bn.running_mean
            stats[f"block{i}.running_var"] = blk.bn.running_var
        return stats

    def trainable_parameter_count(self) -> int:
        return sum(arr.size for arr in self.parameters().values())

    def forward(self, x, rng: SplitMix64 = None, dropout_masks=None):
        """Run the net on a (B, input_width) batch.

        Returns (predictions, cache); cache is None in eval mode. Train mode
        draws dropout masks from ``rng`` unless explicit ``dropout_masks``
        (one float64 0/1 array per block) are supplied, which tests use to
        freeze masks.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_width:
            raise ValidationError(
                f"batch must be (B, {self.input_width}), got {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValidationError("non-finite values in input batch")
        if self.mode == "eval":
            return self._forward_eval(x), None
        return self._forward_train(x, rng, dropout_masks)

    def _forward_eval(self, x):
        for blk in self.blocks:
            x = backend.block_forward_eval(
                x,
                blk.dense.weights,
                blk.dense.bias,
                blk.bn.gamma,
                blk.bn.beta,
                blk.bn.running_mean,
                blk.bn.running_var,
                blk.bn.epsilon,
            )
        return backend.dense_forward(x, self.head.weights, self.head.bias)[:, 0]

    def _forward_train(self, x, rng, dropout_masks):
        n = x.shape[0]
        if n < 2:
            raise ValidationError(
                f"train-mode batch needs B >= 2 for batch statistics, got {n}"
            )
        cache = ForwardCache()
        for i, blk in enumerate(self.blocks):
            p = blk.dropout.p
            if dropout_masks is not None:
                keep = dropout_masks[i]
                inv_keep = 1.0 / (1.0 - p) if p > 0.0 else 1.0
            elif p > 0.0:
                if rng is None:
                    raise ValidationError(
                        "train-mode forward with dropout needs an rng"
                    )
                width = blk.dense.weights.shape[0]
                keep = (rng.uniform((n, width)) >= p).astype(np.float64)
                inv_keep = 1.0 / (1.0 - p)
            else:
                keep, inv_keep = None, 1.0
            out, xhat, inv_std, mu, var, bn_out = backend.block_forward_train(
                x,
                blk.dense.weights,
                blk.dense.bias,
                blk.bn.gamma,
                blk.bn.beta,
                blk.bn.epsilon,
                keep,
                inv_keep,
            )
            m = blk.bn.momentum
            blk.bn.running_mean *= 1.0 - m
            blk.bn.running_mean += m * mu
            blk.bn.running_var *= 1.0 - m
            blk.bn.running_var += m * var * (n / (n - 1.0))  # unbiased
            cache.blocks.append(BlockCache(x, xhat, inv_std, bn_out, keep, inv_keep))
            x = out
        cache.head_x = x
        pred = backend.dense_forward(x, self.head.weights, self.head.bias)[:, 0]
        return pred, cache

    def backward(self, cache: ForwardCache, d_pred, return_input_grad=False):
        """Gradients for every trainable parameter, keyed like parameters().

        ``cache`` must come from the immediately preceding train-mode forward
        and is consumed by this call. With ``return_input_grad`` the gradient
        with respect to the input batch is returned alongside.
        """
        if cache is None or cache.head_x is None:
            raise ValidationError("backward needs the cache of a train-mode forward")
        if cache.consumed:
            raise ValidationError("forward cache already consumed")
        if len(cache.blocks) != len(self.blocks):
            raise ValidationError("cache does not match this net")
        cache.consumed = True

        d_pred = np.asarray(d_pred, dtype=np.float64)
        grads = {}
        d_head = d_pred[:, None]
        d_x, d_w, d_b = backend.dense_backward(d_head, cache.head_x, self.head.weights)
        grads["head.weights"] = d_w
        grads["head.bias"] = d_b
        for i in range(len(self.blocks) - 1, -1, -1):
            blk, c = self.blocks[i], cache.blocks[i]
            d_x, d_w, d_b, d_gamma, d_beta = backend.block_backward(
                d_x,
                c.x,
                blk.dense.weights,
                blk.bn.gamma,
                c.xhat,
                c.inv_std,
                c.bn_out,
                c.keep_mask,
                c.inv_keep,
            )
            grads[f"block{i}.weights"] = d_w
            grads[f"block{i}.bias"] = d_b
            grads[f"block{i}.gamma"] = d_gamma
            grads[f"block{i}.beta"] = d_beta
        if return_input_grad:
            return grads, d_x
        return grads


def _init_dense(rng: SplitMix64, fan_out: int, fan_in: int) -> DenseLayer:
    bound = np.sqrt(6.0 / fan_in)
    weights = (2.0 * rng.uniform((fan_out, fan_in)) - 1.0) * bound
    return DenseLayer(weights=weights, bias=np.zeros(fan_out))


def mse_loss(pred, target) -> float:
    """Mean squared error; symmetric in its arguments."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValidationError("mse_loss of empty vectors is undefined")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_grad(pred, target) -> np.ndarray:
    """d(mse)/d(pred) = 2 (pred - target) / N."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return 2.0 * (pred - target) / pred.size
