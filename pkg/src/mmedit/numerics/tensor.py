"""Float64 tensors and the tape that records differentiable operations.

Operations only record onto a tape while one is active (``with Tape():``), so
inference code runs on plain numpy arrays without building a graph.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

DTYPE = np.float64

_ACTIVE: list["Tape"] = []


class TapeError(RuntimeError):
    pass


class Tensor:
    """A dense float64 array that may participate in reverse-mode autodiff."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_tape")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data, dtype=DTYPE)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.name = name
        self._tape: Tape | None = None

    # ---- array-like surface -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}{flag})"

    # ---- operator sugar; the implementations live in functional.py ---------
    def __add__(self, other):
        from . import functional as F
        return F.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import functional as F
        return F.sub(self, other)

    def __rsub__(self, other):
        from . import functional as F
        return F.sub(other, self)

    def __mul__(self, other):
        from . import functional as F
        return F.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import functional as F
        return F.scale(self, -1.0)

    def __matmul__(self, other):
        from . import functional as F
        return F.matmul(self, other)

    def sum(self, axis=None):
        from . import functional as F
        return F.sum(self, axis)

    def mean(self, axis=None):
        from . import functional as F
        return F.mean(self, axis)

    def reshape(self, *shape):
        from . import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes):
        from . import functional as F
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return F.transpose(self, axes or None)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Node:
    __slots__ = ("out", "parents", "backward")

    def __init__(self, out: Tensor, parents: tuple[Tensor, ...], backward: Callable):
        self.out = out
        self.parents = parents
        self.backward = backward


class Tape:
    """Ordered record of executed operations, replayed once in reverse.

    Nodes are appended as operations execute, so inputs always precede the
    operations that consume them.
    """

    def __init__(self) -> None:
        self.nodes: list[_Node] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.remove(self)

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, loss: Tensor) -> None:
        if self.consumed:
            raise TapeError("backward already ran on this tape; record a new one")
        if loss.data.size != 1:
            raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss._tape is not self:
            raise TapeError("loss was not produced on this tape")
        self.consumed = True

        for node in self.nodes:
            for p in node.parents:
                if p.requires_grad and p._tape is None and p.grad is None:
                    p.grad = np.zeros_like(p.data)
        loss.grad = np.ones_like(loss.data)

        for node in reversed(self.nodes):
            g = node.out.grad
            if g is None:
                continue
            grads = node.backward(g)
            for p, pg in zip(node.parents, grads):
                if pg is None or not p.requires_grad:
                    continue
                if p.grad is None:
                    p.grad = np.array(pg, dtype=DTYPE, copy=True)
                else:
                    p.grad = p.grad + pg
            # intermediate buffers are no longer needed
            node.out.grad = None
        loss.grad = np.ones_like(loss.data)


def active_tape() -> Tape | None:
    return _ACTIVE[-1] if _ACTIVE else None


def record(data: np.ndarray, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    """Wrap ``data`` as an op output, recording it when a tape is active.

    ``backward(grad_out)`` must return one gradient (or None) per parent.
    """
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out._tape = None
    out.requires_grad = False
    tape = _ACTIVE[-1] if _ACTIVE else None
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._tape = tape
        tape.nodes.append(_Node(out, tuple(parents), backward))
    return out


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every requires-grad tensor upstream of ``loss``."""
    if loss._tape is None:
        raise TapeError("loss has no recorded history (was a Tape active?)")
    loss._tape.backward(loss)
