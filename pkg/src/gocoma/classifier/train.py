"""Seeded training loop with Adam, cross-entropy and early stopping.

A model here is anything with ``forward(inputs, train, rng) -> probability
Tensor`` and ``params() -> list of leaf Tensors``; inputs may be one array or
a tuple of arrays (the fusion models take (code, image) pairs). A single
config seed drives everything stochastic through two child streams spawned
in a fixed, documented order (see ``seed_streams``): child 0 yields one batch
permutation per epoch, child 1 yields the dropout masks batch by batch.
Batch order thus depends only on (seed, n_train), never on how much
randomness a particular model consumes, so ablations over different model
architectures see identical data streams. Identical (seed, data, config)
replays bit-identical training.

Early stopping watches validation macro-F1; the best-epoch parameter snapshot
is restored before returning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, NumericalFailureError
from .. import autodiff as ad
from .metrics import MetricsReport, evaluate_predictions


@dataclass
class TrainConfig:
    epochs: int = 25
    learning_rate: float = 5e-6
    batch_size: int = 16
    dropout: float = 0.2
    patience: int = 5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        for name in ("epochs", "learning_rate", "batch_size"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.patience < 0:
            raise InvalidInputError("patience must be >= 0")


class Adam:
    def __init__(self, params, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / (1.0 - self.beta1**self.t)
            v_hat = self.v[i] / (1.0 - self.beta2**self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def seed_streams(seed: int):
    """Two generators derived from one seed: (batch order, dropout).

    Child 0 of the SeedSequence is reserved for the per-epoch shuffle; child 1
    for dropout masks. Keeping the streams separate makes the data order a
    pure function of the seed and the number of training rows.
    """
    order_ss, dropout_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(order_ss), np.random.default_rng(dropout_ss)


def cross_entropy(probs: ad.Tensor, labels) -> ad.Tensor:
    """Mean categorical cross-entropy against integer labels."""
    labels = np.asarray(labels, dtype=np.int64)
    n = probs.data.shape[0]
    if labels.shape != (n,):
        raise InvalidInputError(f"expected {n} labels, got shape {labels.shape}")
    picked = probs[np.arange(n), labels]
    return ad.sum_(-ad.log(ad.clamp_min(picked, 1e-12))) * (1.0 / n)


def _take(X, idx):
    if isinstance(X, tuple):
        return tuple(x[idx] for x in X)
    return X[idx]


def _length(X) -> int:
    return (X[0] if isinstance(X, tuple) else X).shape[0]


def predict(model, X, batch_size: int = 256) -> np.ndarray:
    """Evaluation-mode argmax labels."""
    n = _length(X)
    out = np.empty(n, dtype=np.int64)
    for lo in range(0, n, batch_size):
        idx = slice(lo, min(lo + batch_size, n))
        probs = model.forward(_take(X, idx), train=False)
        out[idx] = np.argmax(probs.data, axis=-1)
    return out


def evaluate(model, X, y, n_classes: int) -> MetricsReport:
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise InvalidInputError("cannot evaluate an empty split")
    return evaluate_predictions(y, predict(model, X), n_classes)


def train(model, X_train, y_train, X_val, y_val, cfg: TrainConfig, n_classes: int):
    """Returns (history, best_epoch); model holds the best-epoch parameters."""
    y_train = np.asarray(y_train, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)
    if y_train.size == 0 or y_val.size == 0:
        raise InvalidInputError("train and validation splits must be nonempty")

    order_rng, dropout_rng = seed_streams(cfg.seed)
    params = model.params()
    opt = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)

    history = []
    best_f1 = -np.inf
    best_epoch = 0
    best_state = [p.data.copy() for p in params]
    wait = 0

    n = y_train.size
    for epoch in range(1, cfg.epochs + 1):
        order = order_rng.permutation(n)
        losses = []
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            probs = model.forward(_take(X_train, idx), train=True, rng=dropout_rng)
            loss = cross_entropy(probs, y_train[idx])
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericalFailureError(f"loss diverged at epoch {epoch}")
            for p in params:
                p.grad = None
            loss.backward()
            opt.step()
            losses.append(value)

        report = evaluate(model, X_val, y_val, n_classes)
        history.append(
            {
                "epoch": epoch,
                "train_loss": float(np.mean(losses)),
                "val_acc": report.accuracy,
                "val_macro_f1": report.macro_f1,
            }
        )
        if report.macro_f1 > best_f1:
            best_f1 = report.macro_f1
            best_epoch = epoch
            best_state = [p.data.copy() for p in params]
            wait = 0
        else:
            wait += 1
            if wait > cfg.patience:
                break

    for p, saved in zip(params, best_state):
        p.data = saved
    return history, best_epoch
