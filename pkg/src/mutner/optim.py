"""Adam with L2 weight decay and row-sparse gradient support."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class Adam:
    """Adam over a dict of numpy parameters, updated in place.

    Row-sparse parameters receive gradients for a subset of rows. A row that
    has never received a gradient keeps zero parameters and zero moments, so
    skipping it is exact as long as it was initialised at zero. Rows that
    have been touched once are updated on every later step, weight decay
    included.
    """

    def __init__(self, params: dict[str, np.ndarray], lr: float, weight_decay: float = 0.0,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 sparse: tuple[str, ...] = (), frozen: dict[str, np.ndarray] | None = None):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.sparse = set(sparse)
        # sparse params keep moments only for active rows, in activation order
        self.m = {k: np.zeros((0,) + v.shape[1:]) if k in self.sparse else np.zeros_like(v)
                  for k, v in params.items()}
        self.v = {k: np.zeros_like(m) for k, m in self.m.items()}
        self.active = {k: np.zeros(0, dtype=np.int64) for k in self.sparse}
        self.slot = {k: np.full(params[k].shape[0], -1, dtype=np.int64) for k in self.sparse}
        # entries that must never move (e.g. masked transitions)
        self.frozen = frozen or {}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray], rows: dict[str, np.ndarray] | None = None) -> None:
        """One update. ``grads`` excludes the weight-decay term."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * np.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        rows = rows or {}
        for name, p in self.params.items():
            if name in self.sparse:
                slot = self.slot[name]
                if name in rows:
                    new = rows[name][slot[rows[name]] < 0]
                    if len(new):
                        slot[new] = np.arange(len(self.active[name]), len(self.active[name]) + len(new))
                        self.active[name] = np.concatenate([self.active[name], new])
                        pad = np.zeros((len(new),) + p.shape[1:])
                        self.m[name] = np.concatenate([self.m[name], pad])
                        self.v[name] = np.concatenate([self.v[name], pad])
                idx = self.active[name]
                w = p[idx]
                g = self.weight_decay * w
                if name in rows and len(rows[name]):
                    g[slot[rows[name]]] += grads[name]
                m, v = self.m[name], self.v[name]
                m *= b1
                m += (1 - b1) * g
                v *= b2
                v += (1 - b2) * g * g
                p[idx] = w - lr_t * m / (np.sqrt(v) + self.eps * np.sqrt(1 - b2 ** self.t))
            else:
                g = grads[name] + self.weight_decay * p
                if name in self.frozen:
                    g = np.where(self.frozen[name], 0.0, g)
                self.m[name] = b1 * self.m[name] + (1 - b1) * g
                self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
                p -= lr_t * self.m[name] / (np.sqrt(self.v[name]) + self.eps * np.sqrt(1 - b2 ** self.t))


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings shared by both recognition patterns.

    ``learning_rate=None`` picks 1e-2 for the orthographic encoder and 3e-5
    for precomputed embeddings. ``dropout`` is feature dropout on encoder
    rows and is off by default.
    """

    learning_rate: float | None = None
    epochs: int = 100
    batch_size: int = 24
    weight_decay: float = 0.01
    seed: int = 42
    patience: int = 5
    dropout: float = 0.0

    def __post_init__(self):
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("epochs, batch_size and patience must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    def resolved_lr(self, encoder_kind: str) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 1e-2 if encoder_kind == "orthographic" else 3e-5


def minibatches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for i in range(0, n, batch_size):
        yield order[i:i + batch_size]


def apply_dropout(local: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    if rate <= 0.0:
        return local
    keep = rng.random(local.shape) >= rate
    return local * keep / (1.0 - rate)
