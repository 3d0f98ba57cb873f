"""Network specification, shape inference and the assembled model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import (
    LRN,
    Convolution,
    Dropout,
    FullyConnected,
    IncompatibleShapes,
    Layer,
    MaxPool,
    ReLU,
    ShapeError,
    SoftMax,
    softmax_nll_grad,
    softmax_nll_loss,
)


class ShapeMismatch(Exception):
    pass


class NumericsError(FloatingPointError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv | relu | pool | lrn | fc | dropout | softmax
    params: dict = field(default_factory=dict)

    def render(self) -> str:
        if not self.params:
            return self.kind
        args = " ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in self.params.items())
        return f"{self.kind} {args}"


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int]  # (H, W, C)
    class_count: int
    init_std: float | str = 0.01  # constant, or "he" for fan-in scaling

    def __post_init__(self):
        if not self.layers or self.layers[-1].kind != "softmax":
            raise ValueError("network must end with a softmax layer")
        shapes = infer_shapes(self)
        if shapes[-1] != (self.class_count,):
            raise ValueError(
                f"final layer produces {shapes[-1]}, expected ({self.class_count},)"
            )

    def render(self) -> str:
        h, w, c = self.input_shape
        lines = [f"input {h} {w} {c}", f"classes {self.class_count}"]
        if self.init_std != 0.01:
            std = self.init_std if isinstance(self.init_std, str) else f"{self.init_std:g}"
            lines.append(f"init_std {std}")
        lines.extend(ls.render() for ls in self.layers)
        return "\n".join(lines) + "\n"


def _build_layer(ls: LayerSpec, init_std: float) -> Layer:
    p = ls.params
    if ls.kind == "conv":
        return Convolution(k=int(p["k"]), nb=int(p["nb"]), s=int(p.get("s", 1)),
                           pad=int(p.get("pad", 0)), b=float(p.get("b", 0.0)),
                           init_std=init_std)
    if ls.kind == "relu":
        return ReLU()
    if ls.kind == "pool":
        return MaxPool(k=int(p["k"]), s=int(p.get("s", 1)), pad=int(p.get("pad", 0)))
    if ls.kind == "lrn":
        return LRN(size=int(p.get("size", 5)), alpha=float(p.get("alpha", 1e-4)),
                   beta=float(p.get("beta", 0.75)), bias=float(p.get("bias", 1.0)))
    if ls.kind == "fc":
        return FullyConnected(n=int(p["n"]), b=float(p.get("b", 0.0)), init_std=init_std)
    if ls.kind == "dropout":
        return Dropout(ratio=float(p.get("ratio", 0.5)))
    if ls.kind == "softmax":
        return SoftMax()
    raise ValueError(f"unknown layer kind {ls.kind!r}")


def infer_shapes(spec: NetworkSpec) -> list[tuple]:
    """Per-layer output shapes, input first: len(spec.layers) + 1 rows."""
    shapes = [tuple(spec.input_shape)]
    cur = shapes[0]
    for i, ls in enumerate(spec.layers):
        layer = _build_layer(ls, spec.init_std)
        try:
            cur = layer.output_shape(cur)
        except ShapeError as e:
            raise IncompatibleShapes(i, str(e)) from None
        shapes.append(cur)
    return shapes


class Network:
    """A stack of layers with shared dtype and a seeded generator.

    ``check_finite=True`` validates every activation and gradient, for
    test runs; leave it off in timed paths.
    """

    def __init__(self, spec: NetworkSpec, dtype=np.float64, seed: int = 0,
                 check_finite: bool = False):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.check_finite = check_finite
        self.rng = np.random.default_rng(seed)
        self.layers: list[Layer] = []
        shape = tuple(spec.input_shape)
        for ls in spec.layers:
            layer = _build_layer(ls, spec.init_std)
            shape = layer.setup(shape, self.rng, self.dtype)
            self.layers.append(layer)

    @property
    def input_shape_nchw(self) -> tuple[int, int, int]:
        h, w, c = self.spec.input_shape
        return (c, h, w)

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                out[f"{i}:{layer.kind}:{name}"] = arr
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.grads().items():
                out[f"{i}:{layer.kind}:{name}"] = arr
        return out

    def set_parameters(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(values) != set(params):
            raise KeyError("parameter name mismatch")
        for name, arr in params.items():
            arr[...] = values[name].astype(self.dtype)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        """Probabilities for a NCHW batch."""
        expected = self.input_shape_nchw
        if tuple(x.shape[1:]) != expected:
            raise ShapeMismatch(f"input shape {x.shape[1:]} != {expected}")
        x = np.ascontiguousarray(x, dtype=self.dtype)
        for layer in self.layers:
            x = layer.forward(x, train=train)
            if self.check_finite and not np.all(np.isfinite(x)):
                raise NumericsError(f"non-finite activation after {layer.kind}")
        return x

    def backward(self, dprobs: np.ndarray, need_input_grad: bool = False):
        """Backpropagate from d(loss)/d(probabilities); train forward first.

        The input gradient is skipped by default since nothing consumes
        it during training.
        """
        g = dprobs.astype(self.dtype)
        for i, layer in enumerate(reversed(self.layers)):
            is_first = i == len(self.layers) - 1
            g = layer.backward(g, need_dx=not is_first or need_input_grad)
            if self.check_finite and g is not None and not np.all(np.isfinite(g)):
                raise NumericsError(f"non-finite gradient after {layer.kind}")
        return g

    def loss_and_grads(
        self, x: np.ndarray, labels: np.ndarray, weight_decay: float = 0.0
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Full objective and parameter gradients for one batch.

        Objective: mean NLL plus weight_decay * 0.5 * ||W||^2 over
        weight matrices (biases are not decayed).
        """
        probs = self.forward(x, train=True)
        loss = softmax_nll_loss(probs, labels)
        self.backward(softmax_nll_grad(probs, labels))
        grads = self.gradients()
        if weight_decay:
            params = self.parameters()
            for name, g in grads.items():
                if name.endswith(":W"):
                    w = params[name]
                    loss += 0.5 * weight_decay * float(np.sum(w * w))
                    g += weight_decay * w
        return loss, grads


# --- reference architectures -------------------------------------------------


def imagenet_spec(class_count: int, init_std=0.01) -> NetworkSpec:
    """The classic 8-depth ImageNet architecture (AlexNet), 227x227x3 in."""
    layers = (
        LayerSpec("conv", {"k": 11, "nb": 96, "s": 4, "b": 0}),
        LayerSpec("relu"),
        LayerSpec("pool", {"k": 3, "s": 2}),
        LayerSpec("lrn", {"size": 5, "alpha": 1e-4, "beta": 0.75}),
        LayerSpec("conv", {"k": 5, "nb": 256, "pad": 2, "b": 1}),
        LayerSpec("relu"),
        LayerSpec("pool", {"k": 3, "s": 2}),
        LayerSpec("lrn", {"size": 5, "alpha": 1e-4, "beta": 0.75}),
        LayerSpec("conv", {"k": 3, "nb": 384, "pad": 1, "b": 0}),
        LayerSpec("relu"),
        LayerSpec("conv", {"k": 3, "nb": 384, "pad": 1, "b": 1}),
        LayerSpec("relu"),
        LayerSpec("conv", {"k": 3, "nb": 256, "pad": 1, "b": 1}),
        LayerSpec("relu"),
        LayerSpec("pool", {"k": 3, "s": 2}),
        LayerSpec("fc", {"n": 4096, "b": 1}),
        LayerSpec("relu"),
        LayerSpec("dropout", {"ratio": 0.5}),
        LayerSpec("fc", {"n": 4096, "b": 1}),
        LayerSpec("relu"),
        LayerSpec("dropout", {"ratio": 0.5}),
        LayerSpec("fc", {"n": class_count}),
        LayerSpec("softmax"),
    )
    return NetworkSpec(layers, (227, 227, 3), class_count, init_std)


def desk_spec(class_count: int, init_std="he") -> NetworkSpec:
    """Small 64x64x3 variant exercising every layer kind; trains on CPU
    in minutes."""
    layers = (
        LayerSpec("conv", {"k": 5, "nb": 16, "s": 2, "b": 0}),
        LayerSpec("relu"),
        LayerSpec("lrn", {"size": 5, "alpha": 1e-4, "beta": 0.75}),
        LayerSpec("pool", {"k": 3, "s": 2}),
        LayerSpec("conv", {"k": 3, "nb": 32, "pad": 1, "b": 1}),
        LayerSpec("relu"),
        LayerSpec("pool", {"k": 3, "s": 2}),
        LayerSpec("fc", {"n": 128, "b": 1}),
        LayerSpec("relu"),
        LayerSpec("dropout", {"ratio": 0.5}),
        LayerSpec("fc", {"n": class_count}),
        LayerSpec("softmax"),
    )
    return NetworkSpec(layers, (64, 64, 3), class_count, init_std)
