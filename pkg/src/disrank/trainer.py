"""Training orchestration: epoch loop, scheduler hookup, checkpointing,
loss history, prediction.

Everything is deterministic given the config seed: the split shuffle is
seeded with ``seed``, each epoch's batch shuffle with ``seed XOR epoch``,
weight init with ``seed`` and the dropout stream with a seed derived from
``seed`` - so two runs with identical config and data produce byte-identical
checkpoints, manifests and histories.

Model selection: the checkpoint with the best validation loss is saved as
``checkpoint-best.nnck`` (the default for prediction); the last epoch is
saved as ``checkpoint-final.nnck`` with the optimizer state embedded for
resume. A training batch that would have size 1 is dropped (batch statistics
are undefined for it).
"""

import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import split_train_validation
from .embstore import feature_matrix, missing_keys
from .errors import ConfigError, DivergedError, MissingKeyError, ValidationError
from .nn import RegressionNet, mse_loss, mse_loss_grad
from .optim import PlateauScheduler, adamw_init, adamw_step, clip_gradients
from .rng import SplitMix64, derive_seed

log = logging.getLogger(__name__)

_DROPOUT_STREAM_SALT = 0xD509


@dataclass
class TrainConfig:
    epochs: int = 17
    batch_size: int = 32
    learning_rate: float = 1e-4
    split_ratio: float = 0.8
    seed: int = 0
    dropout_p: float = 0.3
    max_grad_norm: float = 1.0
    weight_decay: float = 0.01
    scheduler_factor: float = 0.5
    scheduler_patience: int = 3
    scheduler_threshold: float = 1e-8
    min_lr: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    bn_momentum: float = 0.1
    bn_epsilon: float = 1e-5
    input_width: int = 1536
    hidden_widths: tuple = (512, 256, 128, 64)

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.input_width < 2 or self.input_width % 2:
            raise ConfigError(
                f"input_width must be an even positive width, got {self.input_width}"
            )
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ConfigError(f"bad hidden_widths {self.hidden_widths}")

    @property
    def widths(self) -> tuple:
        return (self.input_width,) + tuple(self.hidden_widths)

    def manifest(self) -> dict:
        """Every hyperparameter, silent defaults included, as strings."""
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "hidden_widths":
                out[f.name] = ",".join(str(w) for w in value)
            else:
                out[f.name] = repr(value) if isinstance(value, float) else str(value)
        out["init"] = "uniform(sqrt(6/fan_in))"
        return out

    @classmethod
    def from_mapping(cls, mapping) -> "TrainConfig":
        """Build from string key=value pairs (config files, CLI flags)."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            if raw is None:
                continue
            kind = fields[key].type
            try:
                if key == "hidden_widths":
                    if isinstance(raw, str):
                        kwargs[key] = tuple(int(w) for w in raw.split(",") if w)
                    else:
                        kwargs[key] = tuple(int(w) for w in raw)
                elif kind in (int, "int"):
                    kwargs[key] = int(raw)
                elif kind in (float, "float"):
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = raw
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}")
        return cls(**kwargs)


@dataclass
class EpochStats:
    epoch: int  # 1-based
    train_loss: float
    val_loss: float
    lr: float  # rate in effect after this epoch's plateau observation


@dataclass
class TrainRun:
    config: TrainConfig
    history: list = field(default_factory=list)
    best_epoch: int = 0  # 1-based index of the minimal validation loss
    best_checkpoint: str = ""
    final_checkpoint: str = ""
    manifest_path: str = ""


def _targets(labeled):
    """Accepts LabeledInstance sequences or plain (id, value) pairs."""
    ids, values = [], []
    for item in labeled:
        if hasattr(item, "pair"):
            ids.append(item.pair.instance_id)
            values.append(item.mean_disagreement)
        else:
            iid, value = item
            ids.append(iid)
            values.append(float(value))
    return ids, np.asarray(values, dtype=np.float64)


def _eval_loss(net, x, y, batch_size):
    preds = predict_matrix(net, x, batch_size)
    return mse_loss(preds, y)


def predict_matrix(net: RegressionNet, x, batch_size=256) -> np.ndarray:
    """Eval-mode predictions for a feature matrix, batched."""
    net.eval_mode()
    out = np.empty(x.shape[0], dtype=np.float64)
    for start in range(0, x.shape[0], batch_size):
        stop = min(start + batch_size, x.shape[0])
        out[start:stop] = net.forward(x[start:stop])[0]
    return out


def train(config: TrainConfig, labeled, store, out_dir, on_batch=None) -> TrainRun:
    """Run the full training protocol; see module docstring for guarantees.

    ``on_batch(epoch, instance_ids)`` is called for every training batch,
    which the leakage tests use to audit batch membership.
    """
    ids, _ = _targets(labeled)
    if len(ids) < 10:
        raise ValidationError(f"need >= 10 labeled instances, got {len(ids)}")
    if 2 * store.dim != config.input_width:
        raise ConfigError(
            f"store dimension {store.dim} gives features of width {2 * store.dim}, "
            f"but the configured input width is {config.input_width}"
        )
    absent = missing_keys(store, ids)
    if absent:
        raise MissingKeyError(absent)

    _, values = _targets(labeled)
    split = split_train_validation(
        list(zip(ids, values)), config.split_ratio, config.seed
    )
    train_ids, y_train = _targets(split.train)
    val_ids, y_val = _targets(split.validation)
    _, x_train = feature_matrix(store, train_ids)
    _, x_val = feature_matrix(store, val_ids)

    net = RegressionNet.create(
        widths=config.widths,
        seed=config.seed,
        dropout_p=config.dropout_p,
        bn_momentum=config.bn_momentum,
        bn_epsilon=config.bn_epsilon,
    )
    params = net.parameters()
    opt = adamw_init(
        params,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.adam_epsilon,
        weight_decay=config.weight_decay,
        no_decay=net.no_decay_names(),
    )
    sched = PlateauScheduler(
        factor=config.scheduler_factor,
        patience=config.scheduler_patience,
        threshold=config.scheduler_threshold,
        min_lr=config.min_lr,
    )
    dropout_rng = SplitMix64(derive_seed(config.seed, _DROPOUT_STREAM_SALT))

    os.makedirs(out_dir, exist_ok=True)
    manifest = config.manifest()
    run = TrainRun(
        config=config,
        best_checkpoint=os.path.join(out_dir, "checkpoint-best.nnck"),
        final_checkpoint=os.path.join(out_dir, "checkpoint-final.nnck"),
        manifest_path=os.path.join(out_dir, "run-manifest.txt"),
    )
    _write_manifest(manifest, run.manifest_path)

    lr = config.learning_rate
    best_val = math.inf
    n_train = len(train_ids)
    for epoch in range(config.epochs):
        perm = SplitMix64(config.seed ^ epoch).permutation(n_train)
        net.train_mode()
        sq_err_sum = 0.0
        seen = 0
        for start in range(0, n_train, config.batch_size):
            idx = perm[start : start + config.batch_size]
            if len(idx) < 2:
                continue  # batch statistics undefined for a single row
            if on_batch is not None:
                on_batch(epoch, [train_ids[i] for i in idx])
            xb, yb = x_train[idx], y_train[idx]
            pred, cache = net.forward(xb, rng=dropout_rng)
            loss = mse_loss(pred, yb)
            if not math.isfinite(loss):
                raise DivergedError(
                    f"non-finite training loss at epoch {epoch + 1}", run.history
                )
            grads = net.backward(cache, mse_loss_grad(pred, yb))
            grads = clip_gradients(grads, config.max_grad_norm)
            opt.learning_rate = lr
            adamw_step(params, grads, opt)
            sq_err_sum += loss * len(idx)
            seen += len(idx)

        train_loss = sq_err_sum / seen
        val_loss = _eval_loss(net, x_val, y_val, config.batch_size)
        if not math.isfinite(val_loss):
            raise DivergedError(
                f"non-finite validation loss at epoch {epoch + 1}", run.history
            )
        lr = sched.step(val_loss, lr)
        run.history.append(
            EpochStats(epoch=epoch + 1, train_loss=train_loss, val_loss=val_loss, lr=lr)
        )
        log.info(
            "epoch %d/%d train_loss=%.6f val_loss=%.6f lr=%.3g",
            epoch + 1,
            config.epochs,
            train_loss,
            val_loss,
            lr,
        )
        if val_loss < best_val:
            best_val = val_loss
            run.best_epoch = epoch + 1
            save_checkpoint(run.best_checkpoint, net, manifest)

    save_checkpoint(run.final_checkpoint, net, manifest, optim_state=opt)
    return run


def predict(checkpoint_path, pairs, store, batch_size=256) -> dict:
    """Eval-mode predictions keyed by instance_id, in input order."""
    pair_ids = [p.instance_id for p in pairs]
    if not pair_ids:
        return {}
    net, _, _ = load_checkpoint(checkpoint_path)
    if 2 * store.dim != net.input_width:
        raise ConfigError(
            f"store dimension {store.dim} gives features of width {2 * store.dim}, "
            f"but the checkpoint expects {net.input_width}"
        )
    ids, x = feature_matrix(store, pair_ids)
    preds = predict_matrix(net, x, batch_size)
    return {iid: float(p) for iid, p in zip(ids, preds)}


def emit_history(history, path) -> None:
    """Loss-history TSV: epoch, train_loss, val_loss, lr - one row per epoch,
    enough to replot the training/validation curves."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch\ttrain_loss\tval_loss\tlr\n")
        for stats in history:
            f.write(
                f"{stats.epoch}\t{stats.train_loss:.6f}"
                f"\t{stats.val_loss:.6f}\t{stats.lr:.12g}\n"
            )


def write_predictions(predictions, path) -> None:
    """Predictions TSV in mapping order, 6 decimal places."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("instance_id\tprediction\n")
        for iid, value in predictions.items():
            f.write(f"{iid}\t{value:.6f}\n")


def read_predictions(path) -> dict:
    from .dataset import _parse_int, _read_rows  # shared TSV plumbing

    out = {}
    for lineno, fields in _read_rows(path, ("instance_id", "prediction")):
        iid = fields[0]
        if iid in out:
            raise ValidationError(f"{path}:{lineno}: duplicate instance_id {iid!r}")
        try:
            out[iid] = float(fields[1])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad prediction {fields[1]!r}")
    return out


def _write_manifest(manifest, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for key in sorted(manifest):
            f.write(f"{key}={manifest[key]}\n")
