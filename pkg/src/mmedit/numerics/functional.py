"""Differentiable operations on :class:`Tensor`.

Every op computes its forward value with numpy and, when a tape is active,
registers a closure returning the gradient for each input.
"""
from __future__ import annotations

import builtins
import math
from typing import Sequence

import numpy as np

from .tensor import DTYPE, Tensor, as_tensor, record


class ShapeError(ValueError):
    pass


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---- elementwise -------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    return record(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, sa), _unbroadcast(-g, sb)

    return record(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data

    def backward(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return record(ad * bd, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return record(a.data * c, (a,), lambda g: (g * c,))


def relu(a: Tensor) -> Tensor:
    pos = a.data > 0
    return record(np.where(pos, a.data, 0.0), (a,), lambda g: (g * pos,))


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(a: Tensor) -> Tensor:
    """Tanh-approximated GELU."""
    x = a.data
    x2 = x * x
    t = np.tanh(_GELU_C * (x + 0.044715 * x2 * x))
    out = 0.5 * x * (1.0 + t)

    def backward(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner),)

    return record(out, (a,), backward)


def masked_fill(a: Tensor, mask: np.ndarray, value: float) -> Tensor:
    """Replace entries where ``mask`` is true by ``value``; no gradient flows there."""
    mask = np.asarray(mask, dtype=bool)
    out = np.where(mask, value, a.data)
    if out.shape != a.shape:
        raise ShapeError(f"mask shape {mask.shape} does not broadcast onto {a.shape}")

    def backward(g):
        return (np.where(mask, 0.0, g),)

    return record(out, (a,), backward)


def dropout(a: Tensor, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    if not training or p <= 0.0:
        return a
    keep = (rng.random(a.shape) >= p) / (1.0 - p)
    return record(a.data * keep, (a,), lambda g: (g * keep,))


# ---- reductions ----------------------------------------------------------------

def sum(a: Tensor, axis=None) -> Tensor:  # noqa: A001 - mirrors numpy
    shape = a.shape
    out = a.data.sum(axis=axis)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return record(np.asarray(out, dtype=DTYPE), (a,), backward)


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return scale(sum(a, axis), 1.0 / n)


# ---- linear algebra and shape manipulation -----------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product ``(..., m, k) @ (..., k, n)``; batch axes broadcast."""
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2 or ad.shape[-1] != bd.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {ad.shape} @ {bd.shape}")

    def backward(g):
        ga = np.matmul(g, np.swapaxes(bd, -1, -2))
        gb = np.matmul(np.swapaxes(ad, -1, -2), g)
        return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

    return record(np.matmul(ad, bd), (a, b), backward)


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return record(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    old = a.shape
    return record(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)
    nd = tensors[0].ndim
    ax = axis % nd

    def backward(g):
        out = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            idx = [builtins.slice(None)] * nd
            idx[ax] = builtins.slice(int(lo), int(hi))
            out.append(g[tuple(idx)])
        return tuple(out)

    return record(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def slice(a: Tensor, index) -> Tensor:  # noqa: A001
    """Basic (non-fancy) indexing; the gradient scatters back into place."""
    shape = a.shape

    def backward(g):
        full = np.zeros(shape, dtype=DTYPE)
        full[index] = g
        return (full,)

    return record(np.array(a.data[index], dtype=DTYPE), (a,), backward)


def embedding(weight: Tensor, ids) -> Tensor:
    """Row lookup ``weight[ids]``; gradients scatter-add into the used rows."""
    ids = np.asarray(ids, dtype=np.int64)
    vocab = weight.shape[0]
    if ids.size:
        lo, hi = int(ids.min()), int(ids.max())
        if lo < 0 or hi >= vocab:
            bad = lo if lo < 0 else hi
            raise IndexError(f"embedding index {bad} out of range for vocabulary of size {vocab}")

    def backward(g):
        gw = np.zeros_like(weight.data)
        np.add.at(gw, ids.reshape(-1), g.reshape(-1, weight.shape[1]))
        return (gw,)

    return record(weight.data[ids], (weight,), backward)


# ---- normalisation -------------------------------------------------------------

def _softmax_array(x: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(x - m)
    s = e.sum(axis=axis, keepdims=True)
    # rows that are entirely masked come out as zeros rather than NaN
    return np.where(s > 0, e / np.where(s > 0, s, 1.0), 0.0)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    if not -a.ndim <= axis < max(a.ndim, 1):
        raise ShapeError(f"softmax axis {axis} invalid for shape {a.shape}")
    y = _softmax_array(a.data, axis)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return record(y, (a,), backward)


def log_softmax_array(x: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    z = x - m
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def layer_norm(x: Tensor, gamma: Tensor | None = None, beta: Tensor | None = None,
               eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then apply the optional affine map."""
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    n = xd.shape[-1]
    g_data = gamma.data if gamma is not None else None
    out = xhat if gamma is None else xhat * g_data
    if beta is not None:
        out = out + beta.data
    parents = [x] + [p for p in (gamma, beta) if p is not None]

    def backward(g):
        gx_hat = g * g_data if gamma is not None else g
        gx = inv / n * (n * gx_hat - gx_hat.sum(-1, keepdims=True)
                        - xhat * (gx_hat * xhat).sum(-1, keepdims=True))
        grads = [gx]
        if gamma is not None:
            grads.append(_unbroadcast(g * xhat, gamma.shape))
        if beta is not None:
            grads.append(_unbroadcast(g, beta.shape))
        return tuple(grads)

    return record(out, parents, backward)
