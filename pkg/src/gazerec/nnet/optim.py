"""Stochastic gradient descent with momentum and a halving LR schedule.

Update rule per parameter tensor:

    V <- momentum * V - lr(t) * grad
    W <- W + V

with lr(t) = base_lr * 0.5 ** floor(t / halving_period).
"""

from __future__ import annotations

import numpy as np


class SGDMomentum:
    def __init__(self, params: dict[str, np.ndarray], base_lr: float = 0.001,
                 momentum: float = 0.9, lr_halving_period: int = 30000):
        self.base_lr = base_lr
        self.momentum = momentum
        self.lr_halving_period = lr_halving_period
        self.velocity = {k: np.zeros_like(v) for k, v in params.items()}

    def learning_rate(self, iteration: int) -> float:
        return self.base_lr * 0.5 ** (iteration // self.lr_halving_period)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             iteration: int) -> float:
        lr = self.learning_rate(iteration)
        for name, p in params.items():
            v = self.velocity[name]
            v *= self.momentum
            v -= lr * grads[name]
            p += v
        return lr
