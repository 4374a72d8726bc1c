"""AdamW updates, global-norm gradient clipping, reduce-on-plateau scheduling.

Parameters and gradients are name -> float64 array maps, matching
``RegressionNet.parameters()``. Weight decay is decoupled (applied directly
to the parameter, not folded into the gradient) and skipped for names listed
in ``no_decay`` - the trainer passes biases, gamma and beta there.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass
class AdamWState:
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    no_decay: frozenset = frozenset()


def adamw_init(params, learning_rate, beta1=0.9, beta2=0.999, epsilon=1e-8,
               weight_decay=0.01, no_decay=frozenset()) -> AdamWState:
    """Fresh state with zero moment buffers shaped like ``params``."""
    return AdamWState(
        step_count=0,
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
        learning_rate=learning_rate,
        weight_decay=weight_decay,
        no_decay=frozenset(no_decay),
    )


def adamw_step(params, grads, state: AdamWState):
    """One decoupled-weight-decay Adam step, in place.

    t += 1; m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2;
    theta <- theta - lr * (mhat / (sqrt(vhat) + eps) + wd * theta)
    with bias-corrected mhat = m/(1-b1^t), vhat = v/(1-b2^t).
    """
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    lr = state.learning_rate
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValidationError(
                f"gradient shape {g.shape} != parameter shape {p.shape} for {name}"
            )
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
        if state.weight_decay != 0.0 and name not in state.no_decay:
            update = update + state.weight_decay * p
        p -= lr * update
    return params, state


def global_grad_norm(grads) -> float:
    """L2 norm of all gradients concatenated."""
    total = 0.0
    for g in grads.values():
        total += float(np.dot(g.ravel(), g.ravel()))
    return math.sqrt(total)


def clip_gradients(grads, max_grad_norm: float):
    """Scale all gradients by min(1, max_grad_norm / ||g||), jointly.

    Returns new arrays (inputs untouched). A norm already within
    max_grad_norm + 1e-12 leaves the gradients unchanged, which also makes
    the operation exactly idempotent.
    """
    if max_grad_norm <= 0.0:
        raise ValidationError(f"max_grad_norm must be > 0, got {max_grad_norm}")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise ValidationError(f"non-finite gradient in {name}; run diverged?")
    norm = global_grad_norm(grads)
    if norm <= max_grad_norm + 1e-12:
        return {k: g.copy() for k, g in grads.items()}
    scale = max_grad_norm / norm
    return {k: g * scale for k, g in grads.items()}


class PlateauScheduler:
    """Halve-on-plateau learning rate control.

    An epoch improves when its loss is below best - threshold. After more
    than ``patience`` consecutive non-improving epochs the rate is multiplied
    by ``factor`` (floored at ``min_lr``) and the counter resets; with
    patience 3 the reduction lands exactly on the 4th consecutive
    non-improving epoch. The rate never increases.
    """

    def __init__(self, factor=0.5, patience=3, threshold=1e-8, min_lr=1e-6):
        if not 0.0 < factor < 1.0:
            raise ValidationError(f"factor must be in (0, 1), got {factor}")
        if patience < 0:
            raise ValidationError(f"patience must be >= 0, got {patience}")
        self.factor = factor
        self.patience = patience
        self.threshold = threshold
        self.min_lr = min_lr
        self.best_loss = math.inf
        self.bad_epochs = 0

    def step(self, val_loss: float, current_lr: float) -> float:
        """Observe one epoch's validation loss; returns the rate to use next."""
        if not math.isfinite(val_loss):
            raise ValidationError(f"non-finite validation loss {val_loss}")
        if val_loss < self.best_loss - self.threshold:
            self.best_loss = val_loss
            self.bad_epochs = 0
            return current_lr
        self.bad_epochs += 1
        if self.bad_epochs > self.patience:
            self.bad_epochs = 0
            return max(current_lr * self.factor, self.min_lr)
        return current_lr
