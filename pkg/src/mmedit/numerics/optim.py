"""Bias-corrected Adam."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    """Update ``params`` in place and advance ``state`` by one step."""
    if lr < 0:
        raise ValueError(f"learning rate must be non-negative, got {lr}")
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch: parameter {p.shape}, gradient {g.shape}, state {m.shape}")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


class Adam:
    """Adam over a named parameter map of tensors."""

    def __init__(self, params: Mapping[str, Tensor], lr: float = 1e-3, betas=(0.9, 0.999),
                 eps: float = 1e-8):
        self.names = list(params)
        self.params = [params[k] for k in self.names]
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.state = AdamState()

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        adam_step([p.data for p in self.params], grads, self.state, self.lr,
                  self.beta1, self.beta2, self.eps)
