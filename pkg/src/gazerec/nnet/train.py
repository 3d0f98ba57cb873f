"""Mini-batch training loop with momentum SGD and the halving schedule."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .network import Network, NetworkSpec
from .optim import SGDMomentum


class DatasetEmpty(Exception):
    pass


class DivergenceDetected(Exception):
    pass


@dataclass
class TrainResult:
    network: Network
    loss_curve: list[tuple[int, float, float]] = field(default_factory=list)  # it, loss, lr
    val_curve: list[tuple[int, float]] = field(default_factory=list)  # it, acc
    iterations_run: int = 0

    @property
    def best_val_accuracy(self) -> float:
        return max((a for _, a in self.val_curve), default=math.nan)


def batch_to_input(images: np.ndarray, dtype) -> np.ndarray:
    """uint8 (N, H, W, 3) to normalized NCHW in [-0.5, 0.5]."""
    x = images.astype(dtype) / 255.0 - 0.5
    return np.ascontiguousarray(x.transpose(0, 3, 1, 2))


def accuracy(network: Network, images: np.ndarray, labels: np.ndarray,
             batch_size: int = 256) -> float:
    correct = 0
    for lo in range(0, len(images), batch_size):
        x = batch_to_input(images[lo : lo + batch_size], network.dtype)
        probs = network.forward(x, train=False)
        correct += int(np.sum(probs.argmax(axis=1) == labels[lo : lo + batch_size]))
    return correct / len(images)


def train(
    spec: NetworkSpec,
    config: TrainConfig,
    train_data: tuple[np.ndarray, np.ndarray],
    val_data: tuple[np.ndarray, np.ndarray] | None = None,
    checkpoint_path: str | os.PathLike | None = None,
    resume_from: str | os.PathLike | None = None,
    log=None,
) -> TrainResult:
    """Train a network on (images uint8 NHWC, labels) arrays.

    Batches are drawn from re-shuffled epochs (seeded, reproducible).
    Emits one loss point per iteration and a validation accuracy every
    ``val_interval`` iterations; stops early once validation accuracy
    reaches ``early_stop_accuracy`` when that is set. Checkpoints carry
    the optimizer state and generator states, so a resumed run
    continues the original trajectory exactly.
    """
    images, labels = train_data
    if len(images) == 0:
        raise DatasetEmpty("training set is empty")
    if val_data is not None and len(val_data[0]) == 0:
        raise DatasetEmpty("validation set is empty")

    dtype = config.dtype
    start_iteration = 0
    if resume_from is not None:
        network, start_iteration, velocity, rng_states = load_checkpoint(
            resume_from, dtype=dtype
        )
        optimizer = SGDMomentum(network.parameters(), config.base_lr, config.momentum,
                                config.lr_halving_period)
        if velocity is not None:
            optimizer.velocity = velocity
        if rng_states:
            network.rng.bit_generator.state = rng_states["dropout"]
    else:
        network = Network(spec, dtype=dtype, seed=config.seed)
        optimizer = SGDMomentum(network.parameters(), config.base_lr, config.momentum,
                                config.lr_halving_period)

    result = TrainResult(network=network)
    params = network.parameters()
    n = len(images)
    # batches are a pure function of (seed, iteration): each epoch's
    # permutation comes from its own generator, so a resumed run draws
    # exactly the batches the uninterrupted run would have
    batches_per_epoch = max(1, n // config.batch_size)
    epoch, order = -1, None

    def batch_indices(iteration):
        nonlocal epoch, order
        e = iteration // batches_per_epoch
        if e != epoch:
            epoch = e
            order = np.random.default_rng((config.seed, e)).permutation(n)
        lo = (iteration % batches_per_epoch) * config.batch_size
        return order[lo : lo + config.batch_size]

    def save(path, iteration):
        save_checkpoint(
            path,
            network,
            iteration=iteration,
            velocity=optimizer.velocity,
            rng_states={"dropout": network.rng.bit_generator.state},
        )

    for iteration in range(start_iteration, config.max_iterations):
        idx = batch_indices(iteration)
        x = batch_to_input(images[idx], dtype)
        loss, grads = network.loss_and_grads(x, labels[idx], config.weight_decay)
        if not math.isfinite(loss):
            raise DivergenceDetected(f"loss {loss} at iteration {iteration}")
        lr = optimizer.step(params, grads, iteration)
        result.loss_curve.append((iteration, loss, lr))
        result.iterations_run = iteration + 1

        is_val_point = val_data is not None and (
            (iteration + 1) % config.val_interval == 0
            or iteration + 1 == config.max_iterations
        )
        if is_val_point:
            acc = accuracy(network, val_data[0], val_data[1])
            result.val_curve.append((iteration + 1, acc))
            if log:
                log(f"iter {iteration + 1}: loss {loss:.4f} lr {lr:g} val {acc:.4f}")
            if config.early_stop_accuracy and acc >= config.early_stop_accuracy:
                break
        elif log and (iteration + 1) % config.val_interval == 0:
            log(f"iter {iteration + 1}: loss {loss:.4f} lr {lr:g}")

        if (
            checkpoint_path
            and config.checkpoint_interval
            and (iteration + 1) % config.checkpoint_interval == 0
        ):
            save(checkpoint_path, iteration + 1)

    if checkpoint_path:
        save(checkpoint_path, result.iterations_run)
    return result


def write_curves(result: TrainResult, loss_path, val_path) -> None:
    """Loss/LR and validation accuracy curves as CSV."""
    with open(loss_path, "w") as fh:
        fh.write("iteration,loss,lr\n")
        for it, loss, lr in result.loss_curve:
            fh.write(f"{it},{loss:.6g},{lr:.6g}\n")
    with open(val_path, "w") as fh:
        fh.write("iteration,val_accuracy\n")
        for it, acc in result.val_curve:
            fh.write(f"{it},{acc:.6g}\n")
