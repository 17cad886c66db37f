"""From-scratch networks in float64: a conv trunk over the depth image with a
dense tower over trunk features concatenated with flat inputs.

Both the actor and the critic are instances of :class:`GraspNet`; the critic
injects the action by appending it to the flat input after the conv trunk.
Convolution passes are the hot loops and exist twice (numba kernels and an
im2col numpy path); dense algebra is plain BLAS either way.

All gradients here are analytic and are validated against central finite
differences in the test suite.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from grasplab import accel
from grasplab.accel import njit
from grasplab.errors import DomainError

ACTIVATIONS = ("relu", "tanh", "linear")


@njit(cache=True)
def _pad_nchw(x, pad):
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad))
    xp[:, :, pad:pad + h, pad:pad + w] = x
    return xp


@njit(cache=True)
def _im2col_kernel(xp, k, stride, oh, ow):
    n, c = xp.shape[0], xp.shape[1]
    cols = np.empty((n * oh * ow, c * k * k))
    idx = 0
    for i in range(n):
        for oy in range(oh):
            y0 = oy * stride
            for ox in range(ow):
                x0 = ox * stride
                j = 0
                for ch in range(c):
                    for ky in range(k):
                        for kx in range(k):
                            cols[idx, j] = xp[i, ch, y0 + ky, x0 + kx]
                            j += 1
                idx += 1
    return cols


@njit(cache=True)
def _col2im_kernel(dcols, n, c, hp, wp, k, stride, oh, ow):
    dxp = np.zeros((n, c, hp, wp))
    idx = 0
    for i in range(n):
        for oy in range(oh):
            y0 = oy * stride
            for ox in range(ow):
                x0 = ox * stride
                j = 0
                for ch in range(c):
                    for ky in range(k):
                        for kx in range(k):
                            dxp[i, ch, y0 + ky, x0 + kx] += dcols[idx, j]
                            j += 1
                idx += 1
    return dxp


def _conv_shape(x, W, stride, pad):
    n, c, h, w = x.shape
    k = W.shape[2]
    oh = (h + 2 * pad - k) // stride + 1
    ow = (w + 2 * pad - k) // stride + 1
    return n, c, h, w, k, oh, ow


def _conv_forward_kernel(x, W, b, stride, pad):
    """Numba path: jitted patch extraction, BLAS matmul for the contraction."""
    n, c, h, w, k, oh, ow = _conv_shape(x, W, stride, pad)
    xp = _pad_nchw(x, pad) if pad > 0 else x
    cols = _im2col_kernel(xp, k, stride, oh, ow)
    out_flat = cols @ W.reshape(W.shape[0], -1).T + b
    return np.ascontiguousarray(
        out_flat.reshape(n, oh, ow, W.shape[0]).transpose(0, 3, 1, 2))


def _conv_backward_kernel(x, W, grad, stride, pad):
    n, c, h, w, k, oh, ow = _conv_shape(x, W, stride, pad)
    xp = _pad_nchw(x, pad) if pad > 0 else x
    cols = _im2col_kernel(xp, k, stride, oh, ow)
    g_flat = np.ascontiguousarray(grad.transpose(0, 2, 3, 1)).reshape(-1, W.shape[0])
    dW = (g_flat.T @ cols).reshape(W.shape)
    db = g_flat.sum(axis=0)
    dcols = g_flat @ W.reshape(W.shape[0], -1)
    dxp = _col2im_kernel(dcols, n, c, h + 2 * pad, w + 2 * pad, k, stride, oh, ow)
    dx = np.ascontiguousarray(dxp[:, :, pad:pad + h, pad:pad + w]) if pad else dxp
    return dx, dW, db


def _padded(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _conv_forward_numpy(x, W, b, stride, pad):
    k = W.shape[2]
    xp = _padded(x, pad)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.einsum("nchwyx,fcyx->nfhw", win, W, optimize=True)
    return out + b[None, :, None, None]


def _conv_backward_numpy(x, W, grad, stride, pad):
    n, c, h, w = x.shape
    k = W.shape[2]
    xp = _padded(x, pad)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    dW = np.einsum("nfhw,nchwyx->fcyx", grad, win, optimize=True)
    db = grad.sum(axis=(0, 2, 3))
    oh, ow = grad.shape[2], grad.shape[3]
    dxp = np.zeros_like(xp)
    for ky in range(k):
        for kx in range(k):
            contrib = np.einsum("nfhw,fc->nchw", grad, W[:, :, ky, kx], optimize=True)
            dxp[:, :, ky:ky + oh * stride:stride, kx:kx + ow * stride:stride] += contrib
    dx = dxp[:, :, pad:pad + h, pad:pad + w] if pad else dxp
    return dx, dW, db


def _apply_activation(z, tag):
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(grad, z, out, tag):
    if tag == "relu":
        return grad * (z > 0.0)
    if tag == "tanh":
        return grad * (1.0 - out * out)
    return grad


class ConvLayer:
    """2-D convolution with bias and an elementwise activation."""

    kind = "conv"

    def __init__(self, W, b, stride=2, pad=1, activation="relu"):
        self.W = np.asarray(W, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        if self.W.ndim != 4 or self.W.shape[2] != self.W.shape[3]:
            raise DomainError(f"conv weight must be (out_c, in_c, k, k), got {self.W.shape}")
        if self.b.shape != (self.W.shape[0],):
            raise DomainError("conv bias must match the output channel count")
        if activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {activation!r}")
        self.stride = int(stride)
        self.pad = int(pad)
        self.activation = activation

    @classmethod
    def initialized(cls, in_c, out_c, kernel, rng, stride=2, pad=1, activation="relu"):
        bound = 1.0 / math.sqrt(in_c * kernel * kernel)
        W = rng.uniform(-bound, bound, size=(out_c, in_c, kernel, kernel))
        b = rng.uniform(-bound, bound, size=out_c)
        return cls(W, b, stride=stride, pad=pad, activation=activation)

    def out_hw(self, h, w):
        k = self.W.shape[2]
        return ((h + 2 * self.pad - k) // self.stride + 1,
                (w + 2 * self.pad - k) // self.stride + 1)

    def forward(self, x):
        if accel.NUMBA_ENABLED:
            z = _conv_forward_kernel(x, self.W, self.b, self.stride, self.pad)
        else:
            z = _conv_forward_numpy(x, self.W, self.b, self.stride, self.pad)
        return _apply_activation(z, self.activation), (x, z)

    def backward(self, cache, grad_out):
        x, z = cache
        out = _apply_activation(z, self.activation)
        gz = _activation_grad(grad_out, z, out, self.activation)
        gz = np.ascontiguousarray(gz)
        if accel.NUMBA_ENABLED:
            return _conv_backward_kernel(x, self.W, gz, self.stride, self.pad)
        return _conv_backward_numpy(x, self.W, gz, self.stride, self.pad)


class DenseLayer:
    """Affine layer ``x @ W + b`` with an elementwise activation."""

    kind = "dense"

    def __init__(self, W, b, activation="relu"):
        self.W = np.asarray(W, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        if self.W.ndim != 2:
            raise DomainError(f"dense weight must be 2-D, got shape {self.W.shape}")
        if self.b.shape != (self.W.shape[1],):
            raise DomainError("dense bias must match the output width")
        if activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {activation!r}")
        self.activation = activation

    @classmethod
    def initialized(cls, in_dim, out_dim, rng, activation="relu", scale=None):
        bound = scale if scale is not None else 1.0 / math.sqrt(in_dim)
        W = rng.uniform(-bound, bound, size=(in_dim, out_dim))
        b = rng.uniform(-bound, bound, size=out_dim)
        return cls(W, b, activation=activation)

    def forward(self, x):
        z = x @ self.W + self.b
        return _apply_activation(z, self.activation), (x, z)

    def backward(self, cache, grad_out):
        x, z = cache
        out = _apply_activation(z, self.activation)
        gz = _activation_grad(grad_out, z, out, self.activation)
        dW = x.T @ gz
        db = gz.sum(axis=0)
        dx = gz @ self.W.T
        return dx, dW, db


class GraspNet:
    """Conv trunk on images, dense tower on [trunk features, flat inputs].

    ``forward`` returns (output, cache); ``backward`` consumes the cache and
    an output gradient and returns (parameter gradients aligned with
    :meth:`parameters`, gradient w.r.t. the flat inputs).  The flat-input
    gradient is how action gradients flow from critic to actor.
    """

    def __init__(self, image_shape, flat_dim, conv_layers, dense_layers):
        self.image_shape = tuple(image_shape)  # (channels, height, width)
        self.flat_dim = int(flat_dim)
        self.conv_layers = list(conv_layers)
        self.dense_layers = list(dense_layers)
        self._validate_chain()

    def _validate_chain(self):
        c, h, w = self.image_shape
        for layer in self.conv_layers:
            if layer.W.shape[1] != c:
                raise DomainError(
                    f"conv expects {layer.W.shape[1]} input channels, trunk carries {c}")
            h, w = layer.out_hw(h, w)
            if h < 1 or w < 1:
                raise DomainError("conv trunk shrinks the image away; fewer layers needed")
            c = layer.W.shape[0]
        self.trunk_dim = c * h * w
        dim = self.trunk_dim + self.flat_dim
        for layer in self.dense_layers:
            if layer.W.shape[0] != dim:
                raise DomainError(
                    f"dense expects {layer.W.shape[0]} inputs, tower carries {dim}")
            dim = layer.W.shape[1]
        self.out_dim = dim
        for arr in self.parameters():
            if not np.all(np.isfinite(arr)):
                raise DomainError("network parameters must be finite")

    @classmethod
    def build(cls, image_shape, flat_dim, out_dim, conv_channels, kernel, stride,
              dense_units, head_activation, rng, head_scale=3e-3):
        c, h, w = image_shape
        convs = []
        for out_c in conv_channels:
            convs.append(ConvLayer.initialized(c, out_c, kernel, rng,
                                               stride=stride, pad=1))
            c = out_c
        net = cls(image_shape, flat_dim, convs, [])
        dim = net.trunk_dim + flat_dim
        denses = []
        for units in dense_units:
            denses.append(DenseLayer.initialized(dim, units, rng, activation="relu"))
            dim = units
        denses.append(DenseLayer.initialized(dim, out_dim, rng,
                                             activation=head_activation, scale=head_scale))
        return cls(image_shape, flat_dim, convs, denses)

    @property
    def layers(self):
        return self.conv_layers + self.dense_layers

    def parameters(self):
        """Flat list of parameter arrays, stable order: per layer W then b."""
        out = []
        for layer in self.layers:
            out.append(layer.W)
            out.append(layer.b)
        return out

    def parameter_names(self):
        names = []
        for i, layer in enumerate(self.layers):
            names.append(f"{layer.kind}{i}/W")
            names.append(f"{layer.kind}{i}/b")
        return names

    def set_parameters(self, arrays):
        params = self.parameters()
        if len(arrays) != len(params):
            raise DomainError(f"expected {len(params)} arrays, got {len(arrays)}")
        for i, layer in enumerate(self.layers):
            W, b = arrays[2 * i], arrays[2 * i + 1]
            if W.shape != layer.W.shape or b.shape != layer.b.shape:
                raise DomainError(f"shape mismatch loading layer {i}")
            layer.W = np.asarray(W, dtype=np.float64).copy()
            layer.b = np.asarray(b, dtype=np.float64).copy()

    def copy(self):
        convs = [ConvLayer(l.W.copy(), l.b.copy(), l.stride, l.pad, l.activation)
                 for l in self.conv_layers]
        denses = [DenseLayer(l.W.copy(), l.b.copy(), l.activation)
                  for l in self.dense_layers]
        return GraspNet(self.image_shape, self.flat_dim, convs, denses)

    def _check_inputs(self, images, flats):
        if images.ndim == 3:  # single-channel convenience
            images = images[:, None, :, :]
        if images.shape[1:] != self.image_shape:
            raise DomainError(
                f"image batch shape {images.shape[1:]} does not match {self.image_shape}")
        if flats.ndim != 2 or flats.shape[1] != self.flat_dim:
            raise DomainError(
                f"flat input must be (n, {self.flat_dim}), got {flats.shape}")
        if images.shape[0] != flats.shape[0]:
            raise DomainError("image and flat batch sizes differ")
        return np.ascontiguousarray(images, dtype=np.float64), \
            np.asarray(flats, dtype=np.float64)

    def forward(self, images, flats):
        images, flats = self._check_inputs(images, flats)
        n = images.shape[0]
        caches = []
        x = images
        for layer in self.conv_layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        trunk_shape = x.shape
        x = x.reshape(n, -1)
        x = np.concatenate([x, flats], axis=1)
        for layer in self.dense_layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, (caches, trunk_shape, n)

    def backward(self, cache, grad_out):
        caches, trunk_shape, n = cache
        grads = [None] * (2 * len(self.layers))
        g = np.asarray(grad_out, dtype=np.float64)
        offset = len(self.conv_layers)
        for i in range(len(self.dense_layers) - 1, -1, -1):
            layer = self.dense_layers[i]
            g, dW, db = layer.backward(caches[offset + i], g)
            grads[2 * (offset + i)] = dW
            grads[2 * (offset + i) + 1] = db
        g_trunk = g[:, :self.trunk_dim].reshape(trunk_shape)
        g_flat = g[:, self.trunk_dim:].copy()
        g = g_trunk
        for i in range(len(self.conv_layers) - 1, -1, -1):
            layer = self.conv_layers[i]
            g, dW, db = layer.backward(caches[i], g)
            grads[2 * i] = dW
            grads[2 * i + 1] = db
        return grads, g_flat
