"""Differentiable operations. All are deterministic and dtype-preserving."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, as_tensor, make_op


# ---------------------------------------------------------------------------
# elementwise and arithmetic

def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise ValueError(f"add shape mismatch {a.shape} vs {b.shape}")

    def backward(g):
        if a.requires_grad or a._parents:
            a.accumulate_grad(g if a.shape == g.shape else g.sum().reshape(a.shape))
        if b.requires_grad or b._parents:
            b.accumulate_grad(g if b.shape == g.shape else g.sum().reshape(b.shape))

    return make_op(a.data + b.data, (a, b), backward, "add")


def scale(a: Tensor, s: float) -> Tensor:
    a = as_tensor(a)
    s = float(s)

    def backward(g):
        a.accumulate_grad(g * np.asarray(s, dtype=g.dtype))

    return make_op(a.data * np.asarray(s, dtype=a.dtype), (a,), backward, "scale")


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch {a.shape} vs {b.shape}")

    def backward(g):
        if a.requires_grad or a._parents:
            a.accumulate_grad(g * b.data)
        if b.requires_grad or b._parents:
            b.accumulate_grad(g * a.data)

    return make_op(a.data * b.data, (a, b), backward, "mul")


def log(a: Tensor, eps: float = 0.0) -> Tensor:
    a = as_tensor(a)
    shifted = a.data + np.asarray(eps, dtype=a.dtype) if eps else a.data
    out_data = np.log(shifted)

    def backward(g):
        a.accumulate_grad(g / shifted)

    return make_op(out_data, (a,), backward, "log")


def elu(a: Tensor, alpha: float = 1.0) -> Tensor:
    a = as_tensor(a)
    neg = np.asarray(alpha, dtype=a.dtype) * np.expm1(np.minimum(a.data, 0))
    out_data = np.where(a.data > 0, a.data, neg)

    def backward(g):
        a.accumulate_grad(
            np.where(a.data > 0, g, g * (neg + np.asarray(alpha, dtype=g.dtype)))
        )

    return make_op(out_data, (a,), backward, "elu")


def sigmoid(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out_data = 1.0 / (1.0 + np.exp(-a.data))
    out_data = out_data.astype(a.dtype)

    def backward(g):
        a.accumulate_grad(g * out_data * (1.0 - out_data))

    return make_op(out_data, (a,), backward, "sigmoid")


def grl(a: Tensor, enabled: bool = True) -> Tensor:
    """Gradient reversal: forward is the identity, backward negates."""
    a = as_tensor(a)
    if not enabled:
        return a

    def backward(g):
        a.accumulate_grad(-g)

    return make_op(a.data.copy(), (a,), backward, "grl")


# ---------------------------------------------------------------------------
# shape plumbing

def reshape(a: Tensor, shape) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        a.accumulate_grad(g.reshape(a.shape))

    return make_op(a.data.reshape(shape), (a,), backward, "reshape")


def flatten(a: Tensor) -> Tensor:
    return reshape(a, (a.shape[0], -1))


def concat(tensors, axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad or t._parents:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t.accumulate_grad(g[tuple(idx)])

    return make_op(
        np.concatenate([t.data for t in tensors], axis=axis),
        tensors,
        backward,
        "concat",
    )


def crop2d(a: Tensor, height: int, width: int) -> Tensor:
    a = as_tensor(a)
    if height > a.shape[2] or width > a.shape[3]:
        raise ValueError("crop larger than input")

    def backward(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[:, :, :height, :width] = g
        a.accumulate_grad(full)

    return make_op(a.data[:, :, :height, :width].copy(), (a,), backward, "crop2d")


def upsample2x(a: Tensor) -> Tensor:
    """Nearest-neighbour 2x spatial upsample of an (N, C, H, W) tensor."""
    a = as_tensor(a)
    out_data = a.data.repeat(2, axis=2).repeat(2, axis=3)

    def backward(g):
        n, c, h2, w2 = g.shape
        a.accumulate_grad(
            g.reshape(n, c, h2 // 2, 2, w2 // 2, 2).sum(axis=(3, 5))
        )

    return make_op(out_data, (a,), backward, "upsample2x")


@lru_cache(maxsize=64)
def _resize_index(src: int, dst: int) -> np.ndarray:
    return np.minimum((np.arange(dst) + 0.5) * src // dst, src - 1).astype(np.intp)


def nearest_resize(a: Tensor, height: int, width: int) -> Tensor:
    """Nearest-neighbour resize to (height, width)."""
    a = as_tensor(a)
    rows = _resize_index(a.shape[2], height)
    cols = _resize_index(a.shape[3], width)
    out_data = a.data[:, :, rows[:, None], cols[None, :]]

    def backward(g):
        dx = np.zeros(a.shape, dtype=g.dtype)
        np.add.at(dx, (slice(None), slice(None), rows[:, None], cols[None, :]), g)
        a.accumulate_grad(dx)

    return make_op(out_data, (a,), backward, "nearest_resize")


# ---------------------------------------------------------------------------
# dense and convolutional layers

def linear(x: Tensor, weight: Tensor, bias: Tensor | None) -> Tensor:
    """x (N, F) @ weight (O, F)^T + bias (O,)."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.shape[1] != weight.shape[1]:
        raise ValueError(
            f"linear expects input features {weight.shape[1]}, got {x.shape[1]}"
        )
    out_data = x.data @ weight.data.T
    if bias is not None:
        out_data = out_data + bias.data

    def backward(g):
        if x.requires_grad or x._parents:
            x.accumulate_grad(g @ weight.data)
        if weight.requires_grad:
            weight.accumulate_grad(g.T @ x.data)
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=0))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_op(out_data, parents, backward, "linear")


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, padding: int):
    n, c, h, w = x.shape
    if padding:
        x = np.pad(
            x, ((0, 0), (0, 0), (padding, padding), (padding, padding))
        )
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ValueError(f"conv kernel {kh}x{kw} larger than padded input {h}x{w}")
    windows = sliding_window_view(x, (kh, kw), axis=(2, 3))[
        :, :, ::stride, ::stride, :, :
    ]  # (N, C, OH, OW, KH, KW)
    cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n * oh * ow, c * kh * kw
    )
    return cols, oh, ow


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """Cross-correlation of x (N,C,H,W) with weight (O,C,KH,KW)."""
    x, weight = as_tensor(x), as_tensor(weight)
    n, c, h, w = x.shape
    o, cw, kh, kw = weight.shape
    if c != cw:
        raise ValueError(
            f"conv2d channel mismatch: input has {c}, kernel expects {cw}"
        )
    cols, oh, ow = _im2col(x.data, kh, kw, stride, padding)
    wmat = weight.data.reshape(o, -1)
    out_mat = cols @ wmat.T
    if bias is not None:
        out_mat = out_mat + bias.data
    out_data = out_mat.reshape(n, oh, ow, o).transpose(0, 3, 1, 2)

    def backward(g):
        g_mat = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * oh * ow, o)
        if weight.requires_grad:
            weight.accumulate_grad((g_mat.T @ cols).reshape(weight.shape))
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(g_mat.sum(axis=0))
        if x.requires_grad or x._parents:
            dcols = (g_mat @ wmat).reshape(n, oh, ow, c, kh, kw)
            dxp = np.zeros(
                (n, c, h + 2 * padding, w + 2 * padding), dtype=g.dtype
            )
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += (
                        dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                    )
            if padding:
                dxp = dxp[:, :, padding:-padding, padding:-padding]
            x.accumulate_grad(dxp)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_op(out_data, parents, backward, "conv2d")


def maxpool2x(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2 (floor on odd sizes)."""
    x = as_tensor(x)
    n, c, h, w = x.shape
    ph, pw = h // 2, w // 2
    view = x.data[:, :, : 2 * ph, : 2 * pw].reshape(n, c, ph, 2, pw, 2)
    flat = view.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ph, pw, 4)
    arg = flat.argmax(axis=-1)
    out_data = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        dflat = np.zeros_like(flat)
        np.put_along_axis(dflat, arg[..., None], g[..., None], axis=-1)
        dview = dflat.reshape(n, c, ph, pw, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        dx = np.zeros(x.shape, dtype=g.dtype)
        dx[:, :, : 2 * ph, : 2 * pw] = dview.reshape(n, c, 2 * ph, 2 * pw)
        x.accumulate_grad(dx)

    return make_op(out_data, (x,), backward, "maxpool2x")


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel batch normalization for (N, C) or (N, C, H, W) input.

    In training mode the running stats arrays are updated in place.
    """
    x = as_tensor(x)
    spatial = x.data.ndim == 4
    axes = (0, 2, 3) if spatial else (0,)
    shape = (1, -1, 1, 1) if spatial else (1, -1)
    if training:
        if x.shape[0] < 2:
            raise ValueError("batch_norm needs batch >= 2 in training mode")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean.astype(running_mean.dtype)
        running_var *= 1.0 - momentum
        running_var += momentum * var.astype(running_var.dtype)
    else:
        mean = running_mean.astype(x.dtype)
        var = running_var.astype(x.dtype)
    inv_std = 1.0 / np.sqrt(var + np.asarray(eps, dtype=x.dtype))
    xhat = (x.data - mean.reshape(shape)) * inv_std.reshape(shape)
    out_data = gamma.data.reshape(shape) * xhat + beta.data.reshape(shape)
    m = x.data.size // x.shape[1]

    def backward(g):
        if gamma.requires_grad:
            gamma.accumulate_grad((g * xhat).sum(axis=axes))
        if beta.requires_grad:
            beta.accumulate_grad(g.sum(axis=axes))
        if x.requires_grad or x._parents:
            gxhat = g * gamma.data.reshape(shape)
            if training:
                dx = (
                    gxhat
                    - gxhat.mean(axis=axes, keepdims=True)
                    - xhat * (gxhat * xhat).mean(axis=axes, keepdims=True)
                ) * inv_std.reshape(shape)
            else:
                dx = gxhat * inv_std.reshape(shape)
            x.accumulate_grad(dx)

    return make_op(out_data, (x, gamma, beta), backward, "batch_norm")


# ---------------------------------------------------------------------------
# losses

def mse(pred: Tensor, target) -> Tensor:
    pred = as_tensor(pred)
    target = target.data if isinstance(target, Tensor) else np.asarray(target)
    if pred.size == 0:
        raise ValueError("mse over empty tensors")
    if pred.shape != target.shape:
        raise ValueError(f"mse shape mismatch {pred.shape} vs {target.shape}")
    target = target.astype(pred.dtype)
    diff = pred.data - target
    out_data = np.asarray((diff * diff).mean(), dtype=pred.dtype)

    def backward(g):
        pred.accumulate_grad(g * 2.0 * diff / diff.size)

    return make_op(out_data, (pred,), backward, "mse")


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean of -log softmax(logits)[label] over the batch."""
    logits = as_tensor(logits)
    labels = np.asarray(labels)
    if logits.size == 0:
        raise ValueError("cross_entropy over empty tensors")
    if logits.data.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ValueError("cross_entropy expects (N, K) logits and (N,) labels")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    expz = np.exp(z)
    softmax = expz / expz.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    picked = softmax[np.arange(n), labels]
    out_data = np.asarray(-np.log(picked).mean(), dtype=logits.dtype)

    def backward(g):
        grad = softmax.copy()
        grad[np.arange(n), labels] -= 1.0
        logits.accumulate_grad(g * grad / n)

    return make_op(out_data, (logits,), backward, "cross_entropy")
