"""Feed-forward layers: dense, conv2d, pooling, batchnorm, dropout, losses.

Every layer caches what its backward pass needs during forward; backward
consumes the cache of the most recent forward call.  Parameters and their
gradients live in per-layer dicts so an optimizer can address them by name.
"""

from __future__ import annotations

import math

import numpy as np

LOG_EPS = 1e-12
BN_EPS = 1e-5


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base: parameterless identity-ish contract for forward/backward."""

    def __init__(self):
        self.params: dict = {}
        self.grads: dict = {}

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def zero_grads(self) -> None:
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)

    @property
    def weight_names(self) -> tuple:
        """Parameter names subject to L2 regularization (weights only)."""
        return ()


class Dense(Layer):
    """Affine map y = x W + b."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        super().__init__()
        self.n_in = n_in
        self.n_out = n_out
        self.params = {
            "W": glorot_uniform(rng, (n_in, n_out), n_in, n_out),
            "b": np.zeros(n_out),
        }
        self.zero_grads()
        self._x = None

    @property
    def weight_names(self) -> tuple:
        return ("W",)

    def forward(self, x, train=True):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ValueError(
                f"dense expects input [batch, {self.n_in}], got {x.shape} "
                f"(weights {self.params['W'].shape})"
            )
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, gy):
        self.grads["W"] += self._x.T @ gy
        self.grads["b"] += gy.sum(axis=0)
        return gy @ self.params["W"].T


class ReLU(Layer):
    def forward(self, x, train=True):
        self._mask = x > 0.0
        return x * self._mask

    def backward(self, gy):
        return gy * self._mask


class Linear(Layer):
    """Identity activation (the 'linear' option of the activation grid)."""

    def forward(self, x, train=True):
        return x

    def backward(self, gy):
        return gy


def activation_layer(name: str) -> Layer:
    if name == "relu":
        return ReLU()
    if name == "linear":
        return Linear()
    raise ValueError(f"unknown activation {name!r}; choose 'relu' or 'linear'")


def _same_padding(size: int, stride: int, kernel: int) -> tuple:
    out = -(-size // stride)  # ceil
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


class Conv2d(Layer):
    """2-D convolution with same padding; input [B, C, H, W]."""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator,
                 kernel: int = 3, stride: int = 2):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        fan_in = in_channels * kernel * kernel
        fan_out = out_channels * kernel * kernel
        self.params = {
            "W": glorot_uniform(rng, (out_channels, in_channels, kernel, kernel),
                                fan_in, fan_out),
            "b": np.zeros(out_channels),
        }
        self.zero_grads()

    @property
    def weight_names(self) -> tuple:
        return ("W",)

    def output_shape(self, h: int, w: int) -> tuple:
        oh = -(-h // self.stride)
        ow = -(-w // self.stride)
        return self.out_channels, oh, ow

    def _im2col(self, xp: np.ndarray, oh: int, ow: int) -> np.ndarray:
        b, c, _, _ = xp.shape
        k, s = self.kernel, self.stride
        cols = np.empty((b, oh, ow, c, k, k))
        for i in range(k):
            for j in range(k):
                patch = xp[:, :, i : i + s * oh : s, j : j + s * ow : s]
                cols[:, :, :, :, i, j] = patch.transpose(0, 2, 3, 1)
        return cols

    def forward(self, x, train=True):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"conv2d expects [batch, {self.in_channels}, H, W], got {x.shape}"
            )
        b, c, h, w = x.shape
        k, s = self.kernel, self.stride
        oh, pt, pb = _same_padding(h, s, k)
        ow, pl, pr = _same_padding(w, s, k)
        xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
        cols = self._im2col(xp, oh, ow)
        self._cache = (cols, x.shape, xp.shape, (pt, pl), (oh, ow))
        wmat = self.params["W"].reshape(self.out_channels, -1)
        y = cols.reshape(b * oh * ow, -1) @ wmat.T + self.params["b"]
        return y.reshape(b, oh, ow, self.out_channels).transpose(0, 3, 1, 2)

    def backward(self, gy):
        cols, x_shape, xp_shape, (pt, pl), (oh, ow) = self._cache
        b, c, h, w = x_shape
        k, s = self.kernel, self.stride
        gy_mat = gy.transpose(0, 2, 3, 1).reshape(b * oh * ow, self.out_channels)
        cols_mat = cols.reshape(b * oh * ow, -1)
        self.grads["W"] += (gy_mat.T @ cols_mat).reshape(self.params["W"].shape)
        self.grads["b"] += gy_mat.sum(axis=0)
        gcols = (gy_mat @ self.params["W"].reshape(self.out_channels, -1)).reshape(
            b, oh, ow, c, k, k
        )
        gxp = np.zeros(xp_shape)
        for i in range(k):
            for j in range(k):
                gxp[:, :, i : i + s * oh : s, j : j + s * ow : s] += gcols[
                    :, :, :, :, i, j
                ].transpose(0, 3, 1, 2)
        return gxp[:, :, pt : pt + h, pl : pl + w]


class MaxPool2(Layer):
    """2x2 max pooling, stride 2; trailing odd rows/columns are discarded."""

    def forward(self, x, train=True):
        b, c, h, w = x.shape
        oh, ow = h // 2, w // 2
        if oh < 1 or ow < 1:
            raise ValueError(f"input {h}x{w} too small for 2x2 pooling")
        cropped = x[:, :, : oh * 2, : ow * 2]
        windows = cropped.reshape(b, c, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5)
        flat = windows.reshape(b, c, oh, ow, 4)
        self._argmax = flat.argmax(axis=-1)
        self._x_shape = x.shape
        return flat.max(axis=-1)

    def backward(self, gy):
        b, c, h, w = self._x_shape
        oh, ow = h // 2, w // 2
        gflat = np.zeros((b, c, oh, ow, 4))
        np.put_along_axis(gflat, self._argmax[..., None], gy[..., None], axis=-1)
        gx = np.zeros(self._x_shape)
        gx[:, :, : oh * 2, : ow * 2] = (
            gflat.reshape(b, c, oh, ow, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, oh * 2, ow * 2)
        )
        return gx


class BatchNorm(Layer):
    """Per-channel batch normalization for [B, D] or [B, C, H, W] inputs.

    Training normalizes with batch statistics and updates running ones;
    inference uses the running statistics.
    """

    def __init__(self, n_channels: int, momentum: float = 0.9, eps: float = BN_EPS):
        super().__init__()
        self.n_channels = n_channels
        self.momentum = momentum
        self.eps = eps
        self.params = {"gamma": np.ones(n_channels), "beta": np.zeros(n_channels)}
        self.zero_grads()
        self.running_mean = np.zeros(n_channels)
        self.running_var = np.ones(n_channels)

    def _axes_and_shape(self, x):
        if x.ndim == 2:
            return (0,), (1, -1)
        if x.ndim == 4:
            return (0, 2, 3), (1, -1, 1, 1)
        raise ValueError(f"batchnorm expects 2-D or 4-D input, got {x.shape}")

    def forward(self, x, train=True):
        axes, shape = self._axes_and_shape(x)
        gamma = self.params["gamma"].reshape(shape)
        beta = self.params["beta"].reshape(shape)
        if train:
            n = int(np.prod([x.shape[a] for a in axes]))
            if n < 2:
                raise ValueError("batch normalization needs batch size >= 2 in training")
            mean = x.mean(axis=axes, keepdims=True)
            var = x.var(axis=axes, keepdims=True)
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * inv_std
            self._cache = (xhat, inv_std, axes, shape, n)
            self.running_mean = (
                self.momentum * self.running_mean + (1 - self.momentum) * mean.reshape(-1)
            )
            self.running_var = (
                self.momentum * self.running_var + (1 - self.momentum) * var.reshape(-1)
            )
            return gamma * xhat + beta
        mean = self.running_mean.reshape(shape)
        var = self.running_var.reshape(shape)
        return gamma * (x - mean) / np.sqrt(var + self.eps) + beta

    def backward(self, gy):
        xhat, inv_std, axes, shape, n = self._cache
        gamma = self.params["gamma"].reshape(shape)
        self.grads["gamma"] += (gy * xhat).sum(axis=axes)
        self.grads["beta"] += gy.sum(axis=axes)
        gxhat = gy * gamma
        # batch statistics depend on x, so both mean and variance contribute
        gx = (
            gxhat
            - gxhat.mean(axis=axes, keepdims=True)
            - xhat * (gxhat * xhat).mean(axis=axes, keepdims=True)
        ) * inv_std
        return gx


class Dropout(Layer):
    """Inverted dropout: survivors scaled by 1/(1-rate); identity at inference."""

    def __init__(self, rate: float, rng: np.random.Generator):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng
        self._mask = None

    def forward(self, x, train=True):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        self._mask = (self.rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, gy):
        if self._mask is None:
            return gy
        return gy * self._mask


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _check_one_hot(target: np.ndarray) -> None:
    ok = np.all((target == 0.0) | (target == 1.0)) and np.all(
        target.sum(axis=-1) == 1.0
    )
    if not ok:
        raise ValueError("target must be one-hot")


def cross_entropy(target: np.ndarray, probs: np.ndarray) -> float:
    """Mean cross-entropy -sum_i t_i log p_i, log floored for stability."""
    target = np.asarray(target, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if target.shape != probs.shape:
        raise ValueError(f"shape mismatch: target {target.shape}, probs {probs.shape}")
    _check_one_hot(target)
    losses = -(target * np.log(np.maximum(probs, LOG_EPS))).sum(axis=-1)
    return float(np.mean(losses))


class SoftmaxCrossEntropy:
    """Fused softmax + cross-entropy head with the (p - t)/B gradient."""

    def forward(self, logits: np.ndarray, target: np.ndarray) -> tuple:
        _check_one_hot(target)
        probs = softmax(logits)
        loss = cross_entropy(target, probs)
        self._cache = (probs, target)
        return loss, probs

    def backward(self) -> np.ndarray:
        probs, target = self._cache
        return (probs - target) / probs.shape[0]


def l2_penalty(params: dict, lam: float, weight_names) -> float:
    """lambda * sum of squared weights over the named parameter blocks."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return lam * sum(float(np.sum(params[name] ** 2)) for name in weight_names)


def l2_grad(param: np.ndarray, lam: float) -> np.ndarray:
    return 2.0 * lam * param
