"""Central finite-difference checks for anything built from tape ops."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """``||a - b|| / max(||a||, ||b||, floor)``.

    The floor keeps gradients that are exactly zero in theory (a key bias
    under softmax shift invariance, say) from comparing rounding noise.
    """
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / denom)


def analytic_grads(fn: Callable[..., Tensor], inputs: Sequence[Tensor]) -> list[np.ndarray]:
    for t in inputs:
        t.requires_grad = True
        t.grad = None
    with Tape() as tape:
        loss = fn(*inputs)
    tape.backward(loss)
    return [t.grad.copy() for t in inputs]


def numeric_grad(fn: Callable[..., Tensor], inputs: Sequence[Tensor], which: int,
                 h: float = 1e-5, coords: Sequence[tuple] | None = None) -> np.ndarray:
    """Finite-difference gradient of ``fn`` w.r.t. ``inputs[which]``.

    With ``coords`` only those entries are perturbed; the rest stay NaN.
    """
    x = inputs[which].data
    out = np.full(x.shape, np.nan) if coords is not None else np.zeros(x.shape)
    it = coords if coords is not None else list(np.ndindex(x.shape))
    for idx in it:
        orig = x[idx]
        x[idx] = orig + h
        fp = float(fn(*inputs).data)
        x[idx] = orig - h
        fm = float(fn(*inputs).data)
        x[idx] = orig
        out[idx] = (fp - fm) / (2 * h)
    return out


def check_gradients(fn: Callable[..., Tensor], inputs: Sequence[Tensor], h: float = 1e-5) -> float:
    """Largest relative error between autodiff and central differences over ``inputs``."""
    analytic = analytic_grads(fn, inputs)
    worst = 0.0
    for i, a in enumerate(analytic):
        worst = max(worst, relative_error(a, numeric_grad(fn, inputs, i, h)))
    return worst


def check_directional(fn: Callable[..., Tensor], inputs: Sequence[Tensor], rng: np.random.Generator,
                      h: float = 1e-5, floor: float = 1e-6) -> float:
    """Worst error of ``grad . u`` against a central difference along ``u``.

    One random unit direction per input, so each tensor's gradient is tested
    with two evaluations of ``fn`` instead of two per coordinate. The error is
    scaled by ``||grad||`` (or the difference itself, or ``floor`` if larger),
    not by ``|grad . u|``, which can be tiny when ``u`` is nearly orthogonal
    to the gradient.
    """
    analytic = analytic_grads(fn, inputs)
    worst = 0.0
    for t, g in zip(inputs, analytic):
        u = rng.normal(size=t.shape)
        u /= np.linalg.norm(u) or 1.0
        x = t.data.copy()
        t.data = x + h * u
        fp = float(fn(*inputs).data)
        t.data = x - h * u
        fm = float(fn(*inputs).data)
        t.data = x
        a, b = float(np.sum(g * u)), (fp - fm) / (2 * h)
        worst = max(worst, abs(a - b) / max(float(np.linalg.norm(g)), abs(b), floor))
    return worst
