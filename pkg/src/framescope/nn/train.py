"""Training loop: seeded mini-batches, plateau LR decay, early stopping.

Epochs are numbered from 0. At each epoch end the validation loss is
compared against the best seen so far; an improvement must beat it by
more than ``min_improvement``. After ``lr_patience`` epochs without
improvement the learning rate is multiplied by ``lr_factor`` (and the
patience counter resets); after ``early_stop_patience`` epochs without
improvement training stops. The returned model carries the parameters of
the best-validation-loss epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedLoss, EmptyDataset, ShapeMismatch
from ..series import LabeledDataset, PreprocessSpec, prepare_matrix
from .model import Model, cross_entropy
from .optim import AdamState, adam_step

_VAL_CHUNK = 256


@dataclass(frozen=True)
class TrainConfig:
    init_lr: float = 1e-3
    lr_factor: float = 0.5
    lr_patience: int = 40
    early_stop_patience: int = 80
    max_epochs: int = 1500
    batch_size: int = 16
    seed: int = 0
    min_improvement: float = 1e-4

    def __post_init__(self):
        if not 0 < self.lr_factor < 1:
            raise ValueError("lr_factor must be in (0, 1)")
        if self.lr_patience < 1 or self.early_stop_patience < 1:
            raise ValueError("patience values must be >= 1")
        if self.early_stop_patience <= self.lr_patience:
            raise ValueError("early_stop_patience must exceed lr_patience")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be >= 1")
        if self.init_lr <= 0:
            raise ValueError("init_lr must be > 0")


@dataclass
class TrainHistory:
    """Per-epoch log; learning_rate is the value after that epoch's
    plateau adjustment, so a decay at epoch e reads as lr[e] = lr[e-1]/2."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    learning_rate: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stopped_epoch: int = -1

    def __len__(self) -> int:
        return len(self.val_loss)

    def rows(self) -> list[dict]:
        return [
            {
                "record": "epoch",
                "epoch": e,
                "train_loss": self.train_loss[e],
                "val_loss": self.val_loss[e],
                "val_accuracy": self.val_accuracy[e],
                "learning_rate": self.learning_rate[e],
            }
            for e in range(len(self))
        ] + [
            {
                "record": "summary",
                "best_epoch": self.best_epoch,
                "stopped_epoch": self.stopped_epoch,
                "best_val_loss": (
                    self.val_loss[self.best_epoch] if self.best_epoch >= 0 else None
                ),
            }
        ]


def batch_forward(model: Model, x: np.ndarray) -> np.ndarray:
    """Inference-mode probabilities for a whole input batch, chunked to
    bound peak memory."""
    parts = [
        model.forward(x[lo : lo + _VAL_CHUNK], train=False)
        for lo in range(0, x.shape[0], _VAL_CHUNK)
    ]
    return np.concatenate(parts, axis=0)


def evaluate_loss(model: Model, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    probs = batch_forward(model, x)
    loss = cross_entropy(probs, y)
    acc = float((probs.argmax(axis=1) == y).mean())
    return loss, acc


def _as_inputs(ds: LabeledDataset, prep: PreprocessSpec, dtype) -> tuple[np.ndarray, np.ndarray]:
    x, y = prepare_matrix(ds, prep)
    return x[:, None, :].astype(dtype), y


def train(
    model: Model,
    train_ds: LabeledDataset,
    val_ds: LabeledDataset,
    cfg: TrainConfig,
    prep: PreprocessSpec,
) -> tuple[Model, TrainHistory]:
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise EmptyDataset("training and validation sets must be non-empty")
    if train_ds.class_names != val_ds.class_names:
        raise EmptyDataset("train/val class tables differ")
    if train_ds.n_classes != model.n_classes:
        raise EmptyDataset("model and dataset class counts differ")

    x_train, y_train = _as_inputs(train_ds, prep, model.dtype)
    x_val, y_val = _as_inputs(val_ds, prep, model.dtype)

    rng = np.random.default_rng(cfg.seed)
    params = model.parameters()
    state = AdamState.for_params(params)
    history = TrainHistory()

    lr = cfg.init_lr
    best_loss = np.inf
    best_snapshot = model.snapshot()
    lr_wait = 0
    stop_wait = 0

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(x_train.shape[0])
        loss_sum = 0.0
        for lo in range(0, order.size, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            probs = model.forward(x_train[batch], train=True)
            loss = cross_entropy(probs, y_train[batch])
            if not np.isfinite(loss):
                history.stopped_epoch = epoch
                raise DivergedLoss(f"non-finite training loss at epoch {epoch}", history)
            loss_sum += loss * batch.size
            grads = model.backward(y_train[batch])
            adam_step(params, grads, state, lr)
        val_loss, val_acc = evaluate_loss(model, x_val, y_val)
        if not np.isfinite(val_loss):
            history.stopped_epoch = epoch
            raise DivergedLoss(f"non-finite validation loss at epoch {epoch}", history)

        if val_loss < best_loss - cfg.min_improvement:
            best_loss = val_loss
            best_snapshot = model.snapshot()
            history.best_epoch = epoch
            lr_wait = 0
            stop_wait = 0
        else:
            lr_wait += 1
            stop_wait += 1
            if lr_wait >= cfg.lr_patience:
                lr *= cfg.lr_factor
                lr_wait = 0

        history.train_loss.append(loss_sum / order.size)
        history.val_loss.append(float(val_loss))
        history.val_accuracy.append(val_acc)
        history.learning_rate.append(lr)
        if stop_wait >= cfg.early_stop_patience:
            history.stopped_epoch = epoch
            break

    if history.stopped_epoch < 0:
        history.stopped_epoch = len(history) - 1
    model.restore(best_snapshot)
    return model, history


def predict(model: Model, x: np.ndarray) -> tuple[str, np.ndarray]:
    """Classify one preprocessed vector; ties resolve to the lowest index."""
    x = np.asarray(x, dtype=model.dtype)
    if x.ndim != 1:
        raise ShapeMismatch(f"predict expects a 1-D vector, got shape {x.shape}")
    probs = model.forward(x[None, None, :], train=False)[0]
    return model.class_names[int(np.argmax(probs))], probs
