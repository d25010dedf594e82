"""Loss, optimizer, training loop, and prediction for the VGG-lite net.

Training runs the configured number of epochs with a seeded reshuffle per
epoch, heavy-ball SGD (v' = momentum*v + g, p' = p - lr*v'), and per-epoch
validation in eval mode. The returned network carries either the final or
the best-validation parameters. A non-finite loss aborts with the epoch and
batch index in the message, turning silent divergence into a diagnosable
failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import VggLiteNet

FINAL_EPOCH = "final_epoch"
BEST_VAL = "best_val"
SELECTIONS = (FINAL_EPOCH, BEST_VAL)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    momentum: float = 0.9
    batch_size: int = 16
    epochs: int = 20
    seed: int = 0
    selection: str = BEST_VAL

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float


@dataclass(frozen=True)
class TrainHistory:
    records: tuple[EpochStats, ...]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,train_loss,train_acc,val_acc\n")
            for r in self.records:
                fh.write(f"{r.epoch},{r.train_loss!r},{r.train_acc!r},{r.val_acc!r}\n")

    @staticmethod
    def from_csv(path) -> "TrainHistory":
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "epoch,train_loss,train_acc,val_acc":
                raise ValueError(f"{path}: unexpected history header {header!r}")
            for line in fh:
                epoch, loss, tacc, vacc = line.strip().split(",")
                records.append(
                    EpochStats(int(epoch), float(loss), float(tacc), float(vacc))
                )
        return TrainHistory(records=tuple(records))


def cross_entropy(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its logits gradient, (softmax - onehot)/B.

    Stabilized by subtracting the row max before exponentiation, so huge
    logits cannot overflow.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if z.ndim != 2 or y.shape != (z.shape[0],):
        raise ValueError(f"shape mismatch: logits {z.shape}, labels {y.shape}")
    if y.min() < 0 or y.max() >= z.shape[1]:
        raise ValueError(f"labels must lie in [0, {z.shape[1]})")
    shifted = z - z.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    batch = z.shape[0]
    loss = float(-log_probs[np.arange(batch), y].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(batch), y] -= 1.0
    dlogits /= batch
    return loss, dlogits


def sgd_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    velocity: dict[str, np.ndarray],
    lr: float,
    momentum: float,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """One heavy-ball update. Returns fresh (params', velocity') dicts."""
    if set(params) != set(grads) or set(params) != set(velocity):
        raise ValueError("params, grads, and velocity must share keys")
    new_params = {}
    new_velocity = {}
    for name, p in params.items():
        if grads[name].shape != p.shape or velocity[name].shape != p.shape:
            raise ValueError(f"shape mismatch for {name!r}")
        v = momentum * velocity[name] + grads[name]
        new_velocity[name] = v
        new_params[name] = p - lr * v
    return new_params, new_velocity


def train(
    net: VggLiteNet,
    train_data: tuple[np.ndarray, np.ndarray],
    val_data: tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig,
) -> tuple[VggLiteNet, TrainHistory]:
    """Train in place and return (net, history).

    Batches of size 1 (possible only as the tail of a shuffled epoch) are
    skipped because train-mode batch norm needs at least two rows.
    """
    x_train, y_train = _check_data(train_data, "train")
    x_val, y_val = _check_data(val_data, "val")
    rng = np.random.default_rng(cfg.seed)
    velocity = {name: np.zeros_like(p) for name, p in net.params().items()}
    records = []
    best_acc = -1.0
    best_snap = None
    for epoch in range(cfg.epochs):
        order = rng.permutation(y_train.size)
        net.mode = "train"
        loss_sum = 0.0
        correct = 0
        seen = 0
        for batch_index, start in enumerate(range(0, order.size, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            if idx.size < 2:
                continue
            logits = net.forward(x_train[idx])
            loss, dlogits = cross_entropy(logits, y_train[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {batch_index}"
                )
            grads = net.backprop(dlogits)
            new_params, velocity = sgd_step(
                net.params(), grads, velocity, cfg.lr, cfg.momentum
            )
            net.set_params(new_params)
            loss_sum += loss * idx.size
            correct += int((logits.argmax(axis=1) == y_train[idx]).sum())
            seen += idx.size
        if seen == 0:
            raise ValueError("training set too small to form any batch of >= 2")
        val_labels, _ = predict(net, x_val, batch_size=cfg.batch_size)
        val_acc = float((val_labels == y_val).mean())
        records.append(EpochStats(epoch, loss_sum / seen, correct / seen, val_acc))
        if cfg.selection == BEST_VAL and val_acc > best_acc:
            best_acc = val_acc
            best_snap = net.snapshot()
    if cfg.selection == BEST_VAL and best_snap is not None:
        net.restore(best_snap)
    return net, TrainHistory(records=tuple(records))


def predict(
    net: VggLiteNet, batch: np.ndarray, batch_size: int = 64
) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode (labels, probabilities) for a stack of inputs.

    Ties at the argmax resolve to the lowest class index. Probability rows
    sum to 1 within floating-point roundoff.
    """
    x = np.asarray(batch, dtype=np.float64)
    net.mode = "eval"
    labels = []
    probs = []
    for start in range(0, x.shape[0], batch_size):
        logits = net.forward(x[start : start + batch_size])
        shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
        probs.append(shifted / shifted.sum(axis=1, keepdims=True))
        labels.append(logits.argmax(axis=1))
    return np.concatenate(labels), np.concatenate(probs)


def _check_data(data, name: str) -> tuple[np.ndarray, np.ndarray]:
    x, y = data
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 4 or y.ndim != 1 or x.shape[0] != y.shape[0] or y.size == 0:
        raise ValueError(f"{name} data must be non-empty (N x C x H x W, N labels)")
    return x, y
