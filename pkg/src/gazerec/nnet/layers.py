"""Network layers with forward and analytic backward passes.

Activations are NCHW ``(batch, channels, height, width)`` or NC
``(batch, features)``. Shape inference uses the (H, W, C) convention of
the architecture tables; conversion happens only at setup time.

Spatial output arithmetic everywhere: out = floor((in + 2*pad - k) / s) + 1.

Train-mode forwards cache what the backward needs; test-mode forwards
cache nothing so a trained network can serve concurrent inference.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter1d


class ShapeError(Exception):
    pass


class IncompatibleShapes(ShapeError):
    def __init__(self, layer_index: int, message: str):
        super().__init__(f"layer {layer_index}: {message}")
        self.layer_index = layer_index


def _spatial_out(size: int, k: int, pad: int, stride: int) -> int:
    out = (size + 2 * pad - k) // stride + 1
    if out < 1:
        raise ShapeError(f"kernel {k} stride {stride} pad {pad} does not fit size {size}")
    return out


def _windows(xp: np.ndarray, k: int, stride: int) -> np.ndarray:
    """Sliding (k x k) windows of a padded NCHW tensor, as a view."""
    n, c, hp, wp = xp.shape
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    sn, sc, sh, sw = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp, (n, c, oh, ow, k, k), (sn, sc, sh * stride, sw * stride, sh, sw)
    )


def _scatter_windows(dwin: np.ndarray, x_shape, k: int, stride: int, pad: int) -> np.ndarray:
    """Accumulate per-window gradients back onto the (padded) input."""
    n, c, h, w = x_shape
    oh, ow = dwin.shape[2], dwin.shape[3]
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dwin.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += dwin[
                :, :, :, :, i, j
            ]
    if pad:
        return dxp[:, :, pad : pad + h, pad : pad + w]
    return dxp


class Layer:
    """Base layer; subclasses fill in shapes, params and the two passes."""

    kind = "layer"

    def output_shape(self, in_shape: tuple) -> tuple:
        return in_shape

    def setup(self, in_shape: tuple, rng: np.random.Generator | None, dtype) -> tuple:
        """Record shapes, allocate parameters; returns the output shape."""
        self.in_shape = in_shape
        self.dtype = dtype
        return self.output_shape(in_shape)

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray, need_dx: bool = True) -> np.ndarray | None:
        """Parameter gradients always; input gradient unless ``need_dx``
        is False (the first layer of a network can skip it)."""
        raise NotImplementedError


def _draw_weights(rng, shape, fan_in: int, init_std, dtype):
    """Gaussian fill; ``init_std`` is a constant or "he" for
    sqrt(2 / fan_in) scaling."""
    std = (2.0 / fan_in) ** 0.5 if init_std == "he" else float(init_std)
    return rng.normal(0.0, std, size=shape).astype(dtype)


class Convolution(Layer):
    kind = "conv"

    def __init__(self, k: int, nb: int, s: int = 1, pad: int = 0, b: float = 0.0,
                 init_std=0.01):
        self.k, self.nb, self.s, self.pad = k, nb, s, pad
        self.bias_init = b
        self.init_std = init_std

    def output_shape(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(f"convolution expects (H, W, C) input, got {in_shape}")
        h, w, _ = in_shape
        return (_spatial_out(h, self.k, self.pad, self.s),
                _spatial_out(w, self.k, self.pad, self.s),
                self.nb)

    def setup(self, in_shape, rng, dtype):
        out = super().setup(in_shape, rng, dtype)
        c_in = in_shape[2]
        fan_in = c_in * self.k * self.k
        self.W = _draw_weights(rng, (self.nb, c_in, self.k, self.k), fan_in,
                               self.init_std, dtype)
        self.b = np.full(self.nb, self.bias_init, dtype=dtype)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        return out

    def params(self):
        return {"W": self.W, "b": self.b}

    def grads(self):
        return {"W": self.dW, "b": self.db}

    def forward(self, x, train=False):
        n, c, h, w = x.shape
        k, s, p = self.k, self.s, self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        win = _windows(xp, k, s)
        oh, ow = win.shape[2], win.shape[3]
        # (N*OH*OW, C*k*k) columns against a (F, C*k*k) filter matrix
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * k * k)
        out = cols @ self.W.reshape(self.nb, -1).T + self.b
        if train:
            self._cols = cols
            self._x_shape = x.shape
        return out.reshape(n, oh, ow, self.nb).transpose(0, 3, 1, 2)

    def backward(self, dout, need_dx=True):
        n, c, h, w = self._x_shape
        k, s, p = self.k, self.s, self.pad
        oh, ow = dout.shape[2], dout.shape[3]
        g = dout.transpose(0, 2, 3, 1).reshape(n * oh * ow, self.nb)
        self.db = g.sum(axis=0)
        self.dW = (g.T @ self._cols).reshape(self.W.shape)
        if not need_dx:
            return None
        dcols = g @ self.W.reshape(self.nb, -1)
        dwin = dcols.reshape(n, oh, ow, c, k, k).transpose(0, 3, 1, 2, 4, 5)
        return _scatter_windows(dwin, self._x_shape, k, s, p)


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=False):
        if train:
            self._mask = x > 0
        return np.maximum(x, 0)

    def backward(self, dout, need_dx=True):
        return dout * self._mask if need_dx else None


class MaxPool(Layer):
    kind = "pool"

    def __init__(self, k: int, s: int = 1, pad: int = 0):
        self.k, self.s, self.pad = k, s, pad

    def output_shape(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(f"max pooling expects (H, W, C) input, got {in_shape}")
        h, w, c = in_shape
        return (_spatial_out(h, self.k, self.pad, self.s),
                _spatial_out(w, self.k, self.pad, self.s),
                c)

    def forward(self, x, train=False):
        k, s, p = self.k, self.s, self.pad
        if p:
            fill = np.finfo(x.dtype).min
            xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)), constant_values=fill)
        else:
            xp = x
        win = _windows(xp, k, s)
        n, c, oh, ow = win.shape[:4]
        flat = win.reshape(n, c, oh, ow, k * k)
        if train:
            # argmax picks the first maximum, so tie gradients are not split
            self._arg = flat.argmax(axis=4)
            self._x_shape = x.shape
        return flat.max(axis=4)

    def backward(self, dout, need_dx=True):
        if not need_dx:
            return None
        k, s, p = self.k, self.s, self.pad
        n, c, oh, ow = dout.shape
        dwin = np.zeros((n, c, oh, ow, k * k), dtype=dout.dtype)
        np.put_along_axis(dwin, self._arg[..., None], dout[..., None], axis=4)
        return _scatter_windows(dwin.reshape(n, c, oh, ow, k, k), self._x_shape, k, s, p)


class LRN(Layer):
    """Local response normalization across channels.

    y_c = x_c / (bias + (alpha / size) * sum_{j in window(c)} x_j^2) ^ beta
    with a window of ``size`` channels centered on c, clipped at the
    channel range boundaries.
    """

    kind = "lrn"

    def __init__(self, size: int = 5, alpha: float = 1e-4, beta: float = 0.75,
                 bias: float = 1.0):
        self.size, self.alpha, self.beta, self.bias = size, alpha, beta, bias

    def _window_sum(self, v: np.ndarray) -> np.ndarray:
        # clipped-window channel sum; zero padding outside the range
        # makes the uniform filter mean equal sum / size
        return uniform_filter1d(v, size=self.size, axis=1, mode="constant") * self.size

    def forward(self, x, train=False):
        scale = self.bias + (self.alpha / self.size) * self._window_sum(x * x)
        if train:
            self._x = x
            self._scale = scale
        return x * scale ** (-self.beta)

    def backward(self, dout, need_dx=True):
        if not need_dx:
            return None
        x, scale = self._x, self._scale
        t = dout * x * scale ** (-self.beta - 1.0)
        return dout * scale ** (-self.beta) - (
            2.0 * self.beta * self.alpha / self.size
        ) * x * self._window_sum(t)


class FullyConnected(Layer):
    kind = "fc"

    def __init__(self, n: int, b: float = 0.0, init_std=0.01):
        self.n = n
        self.bias_init = b
        self.init_std = init_std

    def output_shape(self, in_shape):
        return (self.n,)

    def setup(self, in_shape, rng, dtype):
        out = super().setup(in_shape, rng, dtype)
        d = int(np.prod(in_shape))
        self.W = _draw_weights(rng, (d, self.n), d, self.init_std, dtype)
        self.b = np.full(self.n, self.bias_init, dtype=dtype)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        return out

    def params(self):
        return {"W": self.W, "b": self.b}

    def grads(self):
        return {"W": self.dW, "b": self.db}

    def forward(self, x, train=False):
        flat = x.reshape(x.shape[0], -1)
        if train:
            self._flat = flat
            self._x_shape = x.shape
        return flat @ self.W + self.b

    def backward(self, dout, need_dx=True):
        self.db = dout.sum(axis=0)
        self.dW = self._flat.T @ dout
        if not need_dx:
            return None
        return (dout @ self.W.T).reshape(self._x_shape)


class Dropout(Layer):
    """Inverted dropout: scaling happens at train time, test is identity."""

    kind = "dropout"

    def __init__(self, ratio: float = 0.5):
        if not 0.0 <= ratio < 1.0:
            raise ValueError(f"dropout ratio must be in [0, 1), got {ratio}")
        self.ratio = ratio
        self.rng: np.random.Generator | None = None

    def setup(self, in_shape, rng, dtype):
        self.rng = rng
        return super().setup(in_shape, rng, dtype)

    def forward(self, x, train=False):
        if not train or self.ratio == 0.0:
            return x
        keep = 1.0 - self.ratio
        self._mask = (self.rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dout, need_dx=True):
        if not need_dx:
            return None
        if self.ratio == 0.0:
            return dout
        return dout * self._mask


class SoftMax(Layer):
    kind = "softmax"

    def forward(self, x, train=False):
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        probs = e / e.sum(axis=1, keepdims=True)
        if train:
            self._probs = probs
        return probs

    def backward(self, dout, need_dx=True):
        if not need_dx:
            return None
        p = self._probs
        return p * (dout - np.sum(dout * p, axis=1, keepdims=True))


def softmax_nll_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log probability of the true class."""
    n = probs.shape[0]
    if np.any(labels < 0) or np.any(labels >= probs.shape[1]):
        raise IndexError(f"label outside [0, {probs.shape[1]})")
    picked = probs[np.arange(n), labels]
    tiny = np.finfo(probs.dtype).tiny
    return float(-np.log(np.maximum(picked, tiny)).mean())


def softmax_nll_grad(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of the mean NLL with respect to the probabilities."""
    n = probs.shape[0]
    g = np.zeros_like(probs)
    picked = probs[np.arange(n), labels]
    tiny = np.finfo(probs.dtype).tiny
    g[np.arange(n), labels] = -1.0 / (n * np.maximum(picked, tiny))
    return g
