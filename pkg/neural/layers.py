"""
Layers of the two-tower CNN with explicit forward and backward passes.

Activations are (B, C, L) for the convolutional part and (B, F) after pooling.
Every layer caches what its backward pass needs during forward; backward
returns the gradient w.r.t. the layer input and stores parameter gradients in
the `grad` buffer of each Tensor.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from data_model.errors import ValidationError


class Tensor:
    """A parameter or buffer: values plus a gradient buffer of the same shape."""

    def __init__(self, value, requires_grad=True):
        self.value = value
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(value) if requires_grad else None

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        if self.requires_grad:
            self.grad[...] = 0


class Layer:
    training = False

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def parameters(self):
        """Yield (name, Tensor) for trainable parameters."""
        return iter(())

    def buffers(self):
        """Yield (name, Tensor) for non-trainable state saved in checkpoints."""
        return iter(())

    def __call__(self, x, training=False):
        return self.forward(x, training)


def conv_output_length(length, kernel_size, stride, padding):
    return (length + 2 * padding - kernel_size) // stride + 1


def same_padding(kernel_size):
    return (kernel_size - 1) // 2


class Conv1d(Layer):
    """Cross-correlation over the last axis: (B, C_in, L) -> (B, C_out, L_out)."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0, rng=None, dtype=np.float32):
        rng = rng if rng is not None else np.random.default_rng()
        bound = 1.0 / np.sqrt(in_channels * kernel_size)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.weight = Tensor(rng.uniform(-bound, bound, (out_channels, in_channels, kernel_size)).astype(dtype))
        self.bias = Tensor(rng.uniform(-bound, bound, out_channels).astype(dtype))
        self._cache = None

    def output_length(self, length):
        return conv_output_length(length, self.kernel_size, self.stride, self.padding)

    def forward(self, x, training=False):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ValidationError(f"Conv1d expects (B, {self.in_channels}, L) input, got {x.shape}")
        length_out = self.output_length(x.shape[2])
        if length_out < 1:
            raise ValidationError(f"Input length {x.shape[2]} is shorter than kernel {self.kernel_size}")
        padded = np.pad(x, ((0, 0), (0, 0), (self.padding, self.padding)))
        windows = sliding_window_view(padded, self.kernel_size, axis=2)[:, :, :: self.stride][:, :, :length_out]
        out = np.tensordot(windows, self.weight.value, axes=([1, 3], [1, 2])).transpose(0, 2, 1)
        self._cache = (x.shape, padded.shape, windows)
        return out + self.bias.value[None, :, None]

    def backward(self, grad):
        x_shape, padded_shape, windows = self._cache
        length_out = grad.shape[2]
        self.weight.grad = np.tensordot(grad, windows, axes=([0, 2], [0, 2])).astype(self.weight.value.dtype)
        self.bias.grad = grad.sum(axis=(0, 2)).astype(self.bias.value.dtype)
        grad_windows = np.tensordot(grad, self.weight.value, axes=([1], [0]))  # (B, L_out, C_in, k)
        grad_padded = np.zeros(padded_shape, dtype=grad.dtype)
        end = self.stride * (length_out - 1) + 1
        for j in range(self.kernel_size):
            grad_padded[:, :, j:j + end:self.stride] += grad_windows[:, :, :, j].transpose(0, 2, 1)
        return grad_padded[:, :, self.padding:self.padding + x_shape[2]]

    def parameters(self):
        yield "weight", self.weight
        yield "bias", self.bias


class BatchNorm1d(Layer):
    """Per-channel normalization over (B, L) with running statistics for eval mode."""

    def __init__(self, channels, eps=1e-5, momentum=0.1, dtype=np.float32):
        self.eps = eps
        self.momentum = momentum
        self.gamma = Tensor(np.ones(channels, dtype=dtype))
        self.beta = Tensor(np.zeros(channels, dtype=dtype))
        self.running_mean = Tensor(np.zeros(channels, dtype=dtype), requires_grad=False)
        self.running_var = Tensor(np.ones(channels, dtype=dtype), requires_grad=False)
        self._cache = None

    def forward(self, x, training=False):
        if x.ndim != 3 or x.shape[1] != self.gamma.shape[0]:
            raise ValidationError(f"BatchNorm1d expects (B, {self.gamma.shape[0]}, L) input, got {x.shape}")
        if training:
            if x.shape[0] < 2:
                raise ValidationError("BatchNorm1d needs a batch of at least 2 in training mode")
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            n = x.shape[0] * x.shape[2]
            self.running_mean.value = ((1 - self.momentum) * self.running_mean.value + self.momentum * mean).astype(
                self.running_mean.value.dtype
            )
            self.running_var.value = (
                (1 - self.momentum) * self.running_var.value + self.momentum * var * n / max(n - 1, 1)
            ).astype(self.running_var.value.dtype)
        else:
            mean, var = self.running_mean.value, self.running_var.value
        inv_std = 1.0 / np.sqrt(var + self.eps)
        normalized = (x - mean[None, :, None]) * inv_std[None, :, None]
        self._cache = (normalized, inv_std, training)
        return self.gamma.value[None, :, None] * normalized + self.beta.value[None, :, None]

    def backward(self, grad):
        normalized, inv_std, training = self._cache
        self.gamma.grad = (grad * normalized).sum(axis=(0, 2)).astype(self.gamma.value.dtype)
        self.beta.grad = grad.sum(axis=(0, 2)).astype(self.beta.value.dtype)
        grad_normalized = grad * self.gamma.value[None, :, None]
        if not training:
            return grad_normalized * inv_std[None, :, None]
        n = grad.shape[0] * grad.shape[2]
        sum_grad = grad_normalized.sum(axis=(0, 2), keepdims=True)
        sum_grad_x = (grad_normalized * normalized).sum(axis=(0, 2), keepdims=True)
        return (inv_std[None, :, None] / n) * (n * grad_normalized - sum_grad - normalized * sum_grad_x)

    def parameters(self):
        yield "gamma", self.gamma
        yield "beta", self.beta

    def buffers(self):
        yield "running_mean", self.running_mean
        yield "running_var", self.running_var


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x, training=False):
        self._mask = x > 0
        return np.where(self._mask, x, 0).astype(x.dtype)

    def backward(self, grad):
        return grad * self._mask


class GlobalAvgPool1d(Layer):
    """(B, C, L) -> (B, C), mean over L."""

    def __init__(self):
        self._length = None

    def forward(self, x, training=False):
        if x.ndim != 3 or x.shape[2] < 1:
            raise ValidationError(f"GlobalAvgPool1d expects (B, C, L>=1) input, got {x.shape}")
        self._length = x.shape[2]
        return x.mean(axis=2)

    def backward(self, grad):
        return np.repeat(grad[:, :, None] / self._length, self._length, axis=2)


class Linear(Layer):
    def __init__(self, in_features, out_features, rng=None, dtype=np.float32):
        rng = rng if rng is not None else np.random.default_rng()
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Tensor(rng.uniform(-bound, bound, (out_features, in_features)).astype(dtype))
        self.bias = Tensor(rng.uniform(-bound, bound, out_features).astype(dtype))
        self._x = None

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.weight.shape[1]:
            raise ValidationError(f"Linear expects (B, {self.weight.shape[1]}) input, got {x.shape}")
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, grad):
        self.weight.grad = (grad.T @ self._x).astype(self.weight.value.dtype)
        self.bias.grad = grad.sum(axis=0).astype(self.bias.value.dtype)
        return grad @ self.weight.value

    def parameters(self):
        yield "weight", self.weight
        yield "bias", self.bias


class Dropout(Layer):
    """Inverted dropout; the identity in eval mode."""

    def __init__(self, p=0.5, rng=None):
        if not 0 <= p < 1:
            raise ValidationError(f"Dropout probability must lie in [0, 1), got {p}")
        self.p = p
        self.rng = rng if rng is not None else np.random.default_rng()
        self._mask = None

    def forward(self, x, training=False):
        if not training or self.p == 0:
            self._mask = None
            return x
        self._mask = (self.rng.random(x.shape) >= self.p).astype(x.dtype) / (1.0 - self.p)
        return x * self._mask

    def backward(self, grad):
        return grad if self._mask is None else grad * self._mask


class Sequential(Layer):
    def __init__(self, *layers):
        self.layers = list(layers)

    def forward(self, x, training=False):
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self):
        for index, layer in enumerate(self.layers):
            for name, tensor in layer.parameters():
                yield f"{index}.{name}", tensor

    def buffers(self):
        for index, layer in enumerate(self.layers):
            for name, tensor in layer.buffers():
                yield f"{index}.{name}", tensor


def conv_block(in_channels, out_channels, kernel_size, rng, dtype):
    """Conv1d (stride 2, same-style padding) -> BatchNorm1d -> ReLU."""
    return [
        Conv1d(in_channels, out_channels, kernel_size, stride=2, padding=same_padding(kernel_size), rng=rng, dtype=dtype),
        BatchNorm1d(out_channels, dtype=dtype),
        ReLU(),
    ]
