"""From-scratch convolutional network: layers, training, persistence."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import (
    ConfigError,
    TrainConfig,
    load_network_spec,
    load_train_config,
    parse_network_spec,
    parse_train_config,
)
from .layers import (
    LRN,
    Convolution,
    Dropout,
    FullyConnected,
    IncompatibleShapes,
    MaxPool,
    ReLU,
    SoftMax,
    softmax_nll_grad,
    softmax_nll_loss,
)
from .network import (
    LayerSpec,
    Network,
    NetworkSpec,
    NumericsError,
    ShapeMismatch,
    desk_spec,
    imagenet_spec,
    infer_shapes,
)
from .optim import SGDMomentum
from .train import (
    DatasetEmpty,
    DivergenceDetected,
    TrainResult,
    accuracy,
    batch_to_input,
    train,
    write_curves,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "Convolution",
    "DatasetEmpty",
    "DivergenceDetected",
    "Dropout",
    "FullyConnected",
    "IncompatibleShapes",
    "LRN",
    "LayerSpec",
    "MaxPool",
    "Network",
    "NetworkSpec",
    "NumericsError",
    "ReLU",
    "SGDMomentum",
    "ShapeMismatch",
    "SoftMax",
    "TrainConfig",
    "TrainResult",
    "accuracy",
    "batch_to_input",
    "desk_spec",
    "imagenet_spec",
    "infer_shapes",
    "load_checkpoint",
    "load_network_spec",
    "load_train_config",
    "parse_network_spec",
    "parse_train_config",
    "save_checkpoint",
    "softmax_nll_grad",
    "softmax_nll_loss",
    "train",
    "write_curves",
]
