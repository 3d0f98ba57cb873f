"""Finite-difference checks for every layer's backward pass.

For a layer f and a fixed random cotangent R, the scalar
phi(x) = sum(f(x) * R) has analytic gradient backward(R); central
differences with h=1e-5 in double precision must agree elementwise to
a relative error of 1e-3 (with a 1e-8 absolute floor for entries that
are pure roundoff).
"""

import numpy as np
import pytest

from gazerec.nnet import (
    LRN,
    Convolution,
    FullyConnected,
    MaxPool,
    ReLU,
    SoftMax,
    softmax_nll_grad,
    softmax_nll_loss,
)

H = 1e-5
TOL = 1e-3
ATOL = 1e-8


def relative_error(analytic, numeric):
    diff = np.abs(analytic - numeric)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-30)
    rel = diff / denom
    rel[diff < ATOL] = 0.0
    return rel


def fd_gradient(phi, x):
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + H
        hi = phi(x)
        flat[i] = orig - H
        lo = phi(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * H)
    return grad


def check_layer(layer, x, param_arrays=()):
    """Compare analytic input/parameter gradients against differences."""
    y = layer.forward(x.copy(), train=True)
    rng = np.random.default_rng(99)
    cot = rng.standard_normal(y.shape)
    dx = layer.backward(cot.copy())
    param_grads = [g.copy() for g in (layer.grads().get("W"), layer.grads().get("b")) if g is not None]

    def phi(_x):
        return float(np.sum(layer.forward(_x, train=True) * cot))

    num_dx = fd_gradient(phi, x.copy())
    err = relative_error(dx, num_dx)
    assert err.max() < TOL, f"input gradient rel err {err.max():.2e}"

    for arr, analytic in zip(param_arrays, param_grads):
        def phi_param(_p, _arr=arr):
            return float(np.sum(layer.forward(x.copy(), train=True) * cot))

        num = fd_gradient(phi_param, arr)
        err = relative_error(analytic, num)
        assert err.max() < TOL, f"param gradient rel err {err.max():.2e}"


def random_input(rng, shape):
    return rng.standard_normal(shape).astype(np.float64)


CONV_CASES = [
    # (batch, channels, size), kernel, filters, stride, pad
    ((2, 3, 8, 8), 3, 4, 1, 0),
    ((2, 2, 9, 9), 3, 3, 2, 1),
    ((1, 4, 7, 7), 5, 2, 2, 2),
    ((3, 1, 6, 6), 1, 5, 1, 0),
]


@pytest.mark.parametrize("shape,k,nb,s,pad", CONV_CASES)
def test_convolution_gradients(shape, k, nb, s, pad):
    rng = np.random.default_rng(hash((shape, k, nb, s, pad)) % 2**32)
    layer = Convolution(k=k, nb=nb, s=s, pad=pad, b=0.1)
    layer.setup((shape[2], shape[3], shape[1]), rng, np.float64)
    check_layer(layer, random_input(rng, shape), (layer.W, layer.b))


FC_CASES = [((4, 10), 7), ((2, 3, 4, 4), 5), ((1, 30), 3)]


@pytest.mark.parametrize("shape,n", FC_CASES)
def test_fully_connected_gradients(shape, n):
    rng = np.random.default_rng(hash((shape, n)) % 2**32)
    layer = FullyConnected(n=n, b=0.5)
    in_shape = shape[1:] if len(shape) == 2 else (shape[2], shape[3], shape[1])
    layer.setup(in_shape, rng, np.float64)
    check_layer(layer, random_input(rng, shape), (layer.W, layer.b))


RELU_SHAPES = [(2, 3, 5, 5), (4, 17), (1, 2, 8, 3)]


@pytest.mark.parametrize("shape", RELU_SHAPES)
def test_relu_gradients(shape):
    rng = np.random.default_rng(hash(shape) % 2**32)
    x = random_input(rng, shape)
    x[np.abs(x) < 0.05] += 0.1  # keep away from the kink
    check_layer(ReLU(), x)


POOL_CASES = [
    ((2, 2, 6, 6), 2, 2, 0),
    ((1, 3, 7, 7), 3, 2, 0),
    ((2, 1, 5, 5), 3, 1, 1),
]


@pytest.mark.parametrize("shape,k,s,pad", POOL_CASES)
def test_maxpool_gradients(shape, k, s, pad):
    rng = np.random.default_rng(hash((shape, k, s, pad)) % 2**32)
    layer = MaxPool(k=k, s=s, pad=pad)
    # well-separated values avoid argmax flips under the probe step
    x = rng.permutation(np.arange(np.prod(shape), dtype=np.float64))
    x = (x / x.size).reshape(shape)
    check_layer(layer, x)


LRN_SHAPES = [(2, 7, 4, 4), (1, 5, 3, 6), (2, 12, 2, 2)]


@pytest.mark.parametrize("shape", LRN_SHAPES)
def test_lrn_gradients(shape):
    rng = np.random.default_rng(hash(shape) % 2**32)
    layer = LRN(size=5, alpha=1e-4, beta=0.75, bias=1.0)
    check_layer(layer, random_input(rng, shape))


SOFTMAX_CASES = [(3, 5), (2, 9), (6, 2)]


@pytest.mark.parametrize("shape", SOFTMAX_CASES)
def test_softmax_loss_composite_gradients(shape):
    # composite: logits -> softmax -> mean NLL against fixed labels
    rng = np.random.default_rng(hash(shape) % 2**32)
    n, c = shape
    labels = rng.integers(0, c, size=n)
    layer = SoftMax()
    x = random_input(rng, shape)

    probs = layer.forward(x.copy(), train=True)
    dx = layer.backward(softmax_nll_grad(probs, labels))

    def phi(_x):
        return softmax_nll_loss(layer.forward(_x, train=True), labels)

    num_dx = fd_gradient(phi, x.copy())
    err = relative_error(dx, num_dx)
    assert err.max() < TOL, f"softmax+loss rel err {err.max():.2e}"


def test_maxpool_routes_all_gradient_to_argmax():
    rng = np.random.default_rng(0)
    layer = MaxPool(k=2, s=2)
    x = rng.standard_normal((2, 3, 8, 8))
    layer.forward(x, train=True)
    dout = rng.standard_normal((2, 3, 4, 4))
    dx = layer.backward(dout)
    assert dx.sum() == pytest.approx(dout.sum(), rel=1e-12)
    # gradient lands only where the input attains the window max
    assert np.count_nonzero(dx) <= dout.size


def test_conv_zero_input_gradients():
    rng = np.random.default_rng(1)
    layer = Convolution(k=3, nb=4, b=0.5)
    layer.setup((6, 6, 2), rng, np.float64)
    x = np.zeros((2, 2, 6, 6))
    y = layer.forward(x, train=True)
    layer.backward(np.ones_like(y))
    assert np.all(layer.dW == 0)
    assert np.all(layer.db != 0)
