"""Named parameter tensors and their initialisation."""
from __future__ import annotations

import numpy as np

from ..numerics import Tensor
from .config import ModelConfig


def _attn_shapes(prefix: str, d: int) -> dict[str, tuple[int, ...]]:
    out = {}
    for w in ("q", "k", "v", "o"):
        out[f"{prefix}.w{w}"] = (d, d)
        # a key bias adds the same score to every key of a query, which softmax ignores
        if w != "k":
            out[f"{prefix}.b{w}"] = (d,)
    return out


def _ln_shapes(prefix: str, d: int) -> dict[str, tuple[int, ...]]:
    return {f"{prefix}.g": (d,), f"{prefix}.b": (d,)}


def _ffn_shapes(prefix: str, d: int, f: int) -> dict[str, tuple[int, ...]]:
    return {f"{prefix}.w1": (d, f), f"{prefix}.b1": (f,), f"{prefix}.w2": (f, d), f"{prefix}.b2": (d,)}


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every parameter name with its shape, in a fixed order."""
    d, f = cfg.d_model, cfg.ffn
    shapes: dict[str, tuple[int, ...]] = {"embed": (cfg.vocab_size, d)}
    for k in range(cfg.n_encoders):
        for layer in range(cfg.enc_layers):
            p = f"enc{k}.{layer}"
            shapes |= _ln_shapes(f"{p}.ln1", d) | _attn_shapes(f"{p}.self", d)
            shapes |= _ln_shapes(f"{p}.ln2", d) | _ffn_shapes(f"{p}.ffn", d, f)
        shapes |= _ln_shapes(f"enc{k}.ln", d)
    cross = cfg.variant != "decoder_only"
    for layer in range(cfg.dec_layers):
        p = f"dec.{layer}"
        shapes |= _ln_shapes(f"{p}.ln1", d) | _attn_shapes(f"{p}.self", d)
        if cross:
            shapes |= _ln_shapes(f"{p}.ln2", d) | _attn_shapes(f"{p}.cross", d)
        shapes |= _ln_shapes(f"{p}.ln3", d) | _ffn_shapes(f"{p}.ffn", d, f)
    shapes |= _ln_shapes("dec.ln", d)
    shapes["out.b"] = (cfg.vocab_size,)
    return shapes


def init_params(cfg: ModelConfig, seed: int = 0) -> dict[str, Tensor]:
    """Scaled-normal weights, zero biases, unit layer-norm gains."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in parameter_shapes(cfg).items():
        leaf = name.rsplit(".", 1)[-1]
        if name == "embed":
            data = rng.normal(0.0, cfg.d_model ** -0.5, shape)
        elif len(shape) == 2:
            data = rng.normal(0.0, shape[0] ** -0.5, shape)
        elif leaf == "g":
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        params[name] = Tensor(data, requires_grad=True, name=name)
    return params


def count_parameters(params: dict[str, Tensor]) -> int:
    return int(sum(p.size for p in params.values()))
