"""Layer modules: parameter containers wired over lumiprobe.nn.ops."""

from __future__ import annotations

import numpy as np

from . import ops
from .tensor import Tensor


def kaiming_uniform(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32):
    bound = float(np.sqrt(6.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    """Base: children are discovered by attribute walk, params by recursion."""

    def modules(self):
        for value in self.__dict__.values():
            if isinstance(value, Module):
                yield value
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield item

    def named_params(self, prefix: str = ""):
        out: dict[str, Tensor] = {}
        for key, value in self.__dict__.items():
            path = f"{prefix}{key}"
            if isinstance(value, Tensor) and value.requires_grad:
                out[path] = value
            elif isinstance(value, Module):
                out.update(value.named_params(prefix=path + "."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        out.update(item.named_params(prefix=f"{path}.{i}."))
        return out

    def named_buffers(self, prefix: str = ""):
        out: dict[str, np.ndarray] = {}
        for key, value in self.__dict__.items():
            path = f"{prefix}{key}"
            if isinstance(value, Module):
                out.update(value.named_buffers(prefix=path + "."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        out.update(item.named_buffers(prefix=f"{path}.{i}."))
            elif isinstance(value, np.ndarray) and key.startswith("running_"):
                out[path] = value
        return out

    def set_training(self, training: bool):
        for module in self.modules():
            module.set_training(training)
        self.training = training


class Conv2d(Module):
    def __init__(self, rng, in_ch: int, out_ch: int, kernel: int, stride=1, padding=0):
        fan_in = in_ch * kernel * kernel
        self.weight = Tensor(
            kaiming_uniform(rng, (out_ch, in_ch, kernel, kernel), fan_in),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_ch, dtype=np.float32), requires_grad=True)
        self.stride = stride
        self.padding = padding
        self.training = True

    def __call__(self, x):
        return ops.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class Linear(Module):
    def __init__(self, rng, in_features: int, out_features: int):
        self.weight = Tensor(
            kaiming_uniform(rng, (out_features, in_features), in_features),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_features, dtype=np.float32), requires_grad=True)
        self.training = True

    def __call__(self, x):
        return ops.linear(x, self.weight, self.bias)


class BatchNorm(Module):
    """Per-channel batch norm for (N, C) or (N, C, H, W); momentum 0.1, eps 1e-5."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = Tensor(np.ones(channels, dtype=np.float32), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=np.float32), requires_grad=True)
        self.running_mean = np.zeros(channels, dtype=np.float32)
        self.running_var = np.ones(channels, dtype=np.float32)
        self.momentum = momentum
        self.eps = eps
        self.training = True

    def __call__(self, x):
        return ops.batch_norm(
            x,
            self.gamma,
            self.beta,
            self.running_mean,
            self.running_var,
            self.training,
            self.momentum,
            self.eps,
        )


class Fire(Module):
    """squeeze 1x1 -> ELU -> parallel expand 1x1 / 3x3 -> concat -> ELU -> BN.

    `expand` is the total output channel count, split evenly between the two
    expand branches, so it must be even.
    """

    def __init__(self, rng, in_ch: int, squeeze: int, expand: int):
        if squeeze < 1:
            raise ValueError("squeeze channels must be >= 1")
        if expand < 2 or expand % 2 != 0:
            raise ValueError("expand channels must be even and >= 2")
        half = expand // 2
        self.squeeze = Conv2d(rng, in_ch, squeeze, 1)
        self.expand1 = Conv2d(rng, squeeze, half, 1)
        self.expand3 = Conv2d(rng, squeeze, half, 3, padding=1)
        self.norm = BatchNorm(expand)
        self.training = True

    def __call__(self, x):
        s = ops.elu(self.squeeze(x))
        merged = ops.concat([self.expand1(s), self.expand3(s)], axis=1)
        return self.norm(ops.elu(merged))


class ConvBlock(Module):
    """conv3x3 (stride 2) -> ELU -> BN, the stem building block."""

    def __init__(self, rng, in_ch: int, out_ch: int, stride: int = 2):
        self.conv = Conv2d(rng, in_ch, out_ch, 3, stride=stride, padding=1)
        self.norm = BatchNorm(out_ch)
        self.training = True

    def __call__(self, x):
        return self.norm(ops.elu(self.conv(x)))
