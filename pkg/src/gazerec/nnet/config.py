"""Text formats for network specs and training configuration.

Network spec file: one directive per line. ``input H W C`` and
``classes N`` headers, then layers in order, e.g.::

    input 64 64 3
    classes 9
    conv k=5 nb=16 s=2 b=0
    relu
    pool k=3 s=2
    fc n=128 b=1
    dropout ratio=0.5
    fc n=9
    softmax

Training config file: ``key = value`` lines, ``#`` comments. Keys match
the TrainConfig fields.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

from .network import LayerSpec, NetworkSpec


class ConfigError(Exception):
    pass


_LAYER_KINDS = {"conv", "relu", "pool", "lrn", "fc", "dropout", "softmax"}


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_network_spec(text: str) -> NetworkSpec:
    input_shape = None
    class_count = None
    init_std = 0.01
    layers: list[LayerSpec] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head == "input":
            if len(tokens) != 4:
                raise ConfigError(f"line {line_no}: input needs H W C")
            input_shape = tuple(int(t) for t in tokens[1:])
        elif head == "classes":
            class_count = int(tokens[1])
        elif head == "init_std":
            init_std = tokens[1] if tokens[1] == "he" else float(tokens[1])
        elif head in _LAYER_KINDS:
            params = {}
            for tok in tokens[1:]:
                if "=" not in tok:
                    raise ConfigError(f"line {line_no}: expected key=value, got {tok!r}")
                key, value = tok.split("=", 1)
                params[key] = _parse_number(value)
            layers.append(LayerSpec(head, params))
        else:
            raise ConfigError(f"line {line_no}: unknown directive {head!r}")
    if input_shape is None or class_count is None:
        raise ConfigError("spec needs both 'input' and 'classes' directives")
    try:
        return NetworkSpec(tuple(layers), input_shape, class_count, init_std)
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e)) from None


def load_network_spec(path: str | os.PathLike) -> NetworkSpec:
    with open(path) as fh:
        return parse_network_spec(fh.read())


@dataclass
class TrainConfig:
    base_lr: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 0.0005
    lr_halving_period: int = 30000
    max_iterations: int = 10000
    batch_size: int = 64
    seed: int = 0
    val_interval: int = 100
    checkpoint_interval: int = 0  # 0 disables periodic checkpoints
    early_stop_accuracy: float = 0.0  # 0 disables early stopping
    precision: str = "double"  # double | single

    def __post_init__(self):
        numeric = [self.base_lr, self.momentum, self.weight_decay,
                   self.lr_halving_period, self.max_iterations, self.batch_size]
        if any(v < 0 for v in numeric) or self.batch_size < 1 or self.max_iterations < 1:
            raise ConfigError("train config values must be positive")
        if self.precision not in ("double", "single"):
            raise ConfigError(f"precision must be double or single, got {self.precision!r}")

    @property
    def dtype(self):
        import numpy as np

        return np.float64 if self.precision == "double" else np.float32

    def render(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))


def parse_train_config(text: str, **overrides) -> TrainConfig:
    values: dict = {}
    known = {f.name: f.type for f in fields(TrainConfig)}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key == "precision":
            values[key] = value
        elif known[key] in ("int", int):
            values[key] = int(value)
        else:
            values[key] = float(value)
    values.update(overrides)
    return TrainConfig(**values)


def load_train_config(path: str | os.PathLike, **overrides) -> TrainConfig:
    with open(path) as fh:
        return parse_train_config(fh.read(), **overrides)
