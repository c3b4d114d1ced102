"""Pre-layer-norm transformer in three arrangements.

* ``single_encoder``: one encoder over the joined source, one decoder.
* ``multi_encoder``: one unshared encoder per modality; their outputs are
  concatenated along the position axis and read by a single decoder.
* ``decoder_only``: a single causal stack over ``source <SEP> target``.

All arrangements share one token embedding table, which also serves as the
output projection. Attention logits are scaled by ``1/sqrt(d_model/heads)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..numerics import Tensor, functional as F
from ..numerics.functional import log_softmax_array
from ..numerics.loss import label_smoothed_ce
from .config import ModelConfig
from .params import init_params, parameter_shapes

PAD, BOS, EOS, SEP = 0, 1, 2, 4


class InputError(ValueError):
    pass


def sinusoidal_table(n: int, d: int) -> np.ndarray:
    pos = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(0, d, 2, dtype=np.float64)
    angle = pos / np.power(10000.0, i / d)
    table = np.zeros((n, d))
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle[:, : d // 2])
    return table


def pad_batch(seqs: Sequence[Sequence[int]], left: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Stack id lists into ``(ids, mask)``; ``mask`` is true at real tokens."""
    width = max((len(s) for s in seqs), default=0)
    ids = np.full((len(seqs), width), PAD, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=bool)
    for r, s in enumerate(seqs):
        if not len(s):
            continue
        sl = slice(width - len(s), width) if left else slice(0, len(s))
        ids[r, sl] = s
        mask[r, sl] = True
    return ids, mask


@dataclass
class DecodeState:
    """Per-row caches for incremental decoding; rows may be reordered."""

    self_k: list[np.ndarray]
    self_v: list[np.ndarray]
    key_mask: np.ndarray
    next_pos: np.ndarray
    cross_k: list[np.ndarray] = field(default_factory=list)
    cross_v: list[np.ndarray] = field(default_factory=list)
    mem_mask: np.ndarray | None = None

    def reorder(self, index: np.ndarray) -> None:
        self.self_k = [a[index] for a in self.self_k]
        self.self_v = [a[index] for a in self.self_v]
        self.key_mask = self.key_mask[index]
        self.next_pos = self.next_pos[index]
        self.cross_k = [a[index] for a in self.cross_k]
        self.cross_v = [a[index] for a in self.cross_v]
        if self.mem_mask is not None:
            self.mem_mask = self.mem_mask[index]


class Transformer:
    def __init__(self, config: ModelConfig, params: dict[str, Tensor] | None = None, seed: int = 0):
        self.config = config
        self.params = params if params is not None else init_params(config, seed)
        expected = parameter_shapes(config)
        if list(self.params) != list(expected):
            missing = sorted(set(expected) - set(self.params))
            extra = sorted(set(self.params) - set(expected))
            raise InputError(f"parameter names do not match config (missing {missing[:3]}, extra {extra[:3]})")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise InputError(f"parameter {name} has shape {self.params[name].shape}, expected {shape}")
        self._pe = sinusoidal_table(config.max_len + 2, config.d_model)
        self.training = False
        self.rng: np.random.Generator | None = None

    # ---- building blocks ----------------------------------------------------------

    def _p(self, name: str) -> Tensor:
        return self.params[name]

    def _linear(self, x: Tensor, w: str, b: str | None) -> Tensor:
        lead = x.shape[:-1]
        y = F.matmul(F.reshape(x, (-1, x.shape[-1])), self._p(w))
        if b is not None:
            y = F.add(y, self._p(b))
        return F.reshape(y, lead + (y.shape[-1],))

    def _ln(self, x: Tensor, prefix: str) -> Tensor:
        return F.layer_norm(x, self._p(f"{prefix}.g"), self._p(f"{prefix}.b"))

    def _drop(self, x: Tensor) -> Tensor:
        return F.dropout(x, self.config.dropout, self.rng, self.training)

    def _heads(self, x: Tensor, prefix: str, which: str) -> Tensor:
        """Project to ``(B, heads, T, head_dim)``."""
        b, t, _ = x.shape
        y = self._linear(x, f"{prefix}.w{which}", None if which == "k" else f"{prefix}.b{which}")
        return F.transpose(F.reshape(y, (b, t, self.config.heads, self.config.head_dim)), (0, 2, 1, 3))

    def _attend(self, q: Tensor, k: Tensor, v: Tensor, allowed: np.ndarray, prefix: str,
                trace: list | None, tag: str) -> Tensor:
        b, h, t, dk = q.shape
        scores = F.scale(F.matmul(q, F.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dk))
        scores = F.masked_fill(scores, ~allowed, -np.inf)
        probs = F.softmax(scores, axis=-1)
        if trace is not None:
            trace.append((tag, probs.data, np.broadcast_to(allowed, probs.shape)))
        ctx = F.reshape(F.transpose(F.matmul(probs, v), (0, 2, 1, 3)), (b, t, h * dk))
        return self._linear(ctx, f"{prefix}.wo", f"{prefix}.bo")

    def _ffn(self, x: Tensor, prefix: str) -> Tensor:
        h = self._linear(x, f"{prefix}.w1", f"{prefix}.b1")
        h = F.gelu(h) if self.config.activation == "gelu" else F.relu(h)
        return self._linear(h, f"{prefix}.w2", f"{prefix}.b2")

    def _embed(self, ids: np.ndarray, positions: np.ndarray) -> Tensor:
        x = F.scale(F.embedding(self._p("embed"), ids), math.sqrt(self.config.d_model))
        if self.config.use_positions:
            x = F.add(x, self._pe[positions])
        return self._drop(x)

    def _check_ids(self, ids: np.ndarray) -> None:
        if ids.size and (ids.min() < 0 or ids.max() >= self.config.vocab_size):
            bad = ids.min() if ids.min() < 0 else ids.max()
            raise InputError(f"token id {bad} out of range for vocabulary of size {self.config.vocab_size}")

    def _fit(self, seq: Sequence[int], limit: int, what: str) -> list[int]:
        seq = list(seq)
        if len(seq) > limit:
            warnings.warn(f"{what} of length {len(seq)} truncated to {limit} tokens", stacklevel=3)
            seq = seq[:limit]
        return seq

    # ---- encoders -----------------------------------------------------------------

    def encoder_forward(self, ids: np.ndarray, mask: np.ndarray, stack: int = 0,
                        trace: list | None = None) -> Tensor:
        """Representations ``(B, S, d)`` from encoder ``stack``."""
        ids = np.asarray(ids, dtype=np.int64)
        self._check_ids(ids)
        b, s = ids.shape
        if s == 0:
            return Tensor(np.zeros((b, 0, self.config.d_model)))
        x = self._embed(ids, np.broadcast_to(np.arange(s), (b, s)))
        allowed = mask[:, None, None, :]
        for layer in range(self.config.enc_layers):
            p = f"enc{stack}.{layer}"
            h = self._ln(x, f"{p}.ln1")
            a = self._attend(self._heads(h, f"{p}.self", "q"), self._heads(h, f"{p}.self", "k"),
                             self._heads(h, f"{p}.self", "v"), allowed, f"{p}.self", trace, f"{p}.self")
            x = F.add(x, self._drop(a))
            x = F.add(x, self._drop(self._ffn(self._ln(x, f"{p}.ln2"), f"{p}.ffn")))
        return self._ln(x, f"enc{stack}.ln")

    def encode_sources(self, sources: Sequence, trace: list | None = None) -> tuple[Tensor, np.ndarray]:
        """Memory and key mask for a batch of sources.

        For ``multi_encoder`` each source is a list of ``n_modalities`` id
        lists; otherwise it is a single id list.
        """
        cfg = self.config
        if cfg.variant == "single_encoder":
            ids, mask = pad_batch([self._fit(s, cfg.max_len, "source") for s in sources])
            return self.encoder_forward(ids, mask, 0, trace), mask
        if cfg.variant != "multi_encoder":
            raise InputError("decoder_only models have no encoder")
        outs, masks = [], []
        for src in sources:
            if len(src) != cfg.n_modalities:
                raise InputError(f"expected {cfg.n_modalities} modalities, got {len(src)}")
        for k in range(cfg.n_modalities):
            ids, mask = pad_batch([self._fit(src[k], cfg.max_len, f"modality {k}") for src in sources])
            outs.append(self.encoder_forward(ids, mask, k, trace))
            masks.append(mask)
        return F.concat(outs, axis=1), np.concatenate(masks, axis=1)

    # ---- decoder stack --------------------------------------------------------------

    def _decoder_stack(self, ids: np.ndarray, positions: np.ndarray, key_mask: np.ndarray,
                       memory: Tensor | None, mem_mask: np.ndarray | None,
                       state: DecodeState | None = None, trace: list | None = None) -> Tensor:
        """Run the causal stack over ``ids``; returns final hidden states.

        With ``state`` the new tokens follow the cached prefix, whose keys and
        values are extended in place. ``key_mask`` covers cache plus new tokens.
        """
        cfg = self.config
        self._check_ids(ids)
        b, t = ids.shape
        t0 = state.self_k[0].shape[2] if state is not None and state.self_k else 0
        causal = np.arange(t0 + t)[None, :] <= (t0 + np.arange(t))[:, None]
        allowed = causal[None, None, :, :] & key_mask[:, None, None, :]
        x = self._embed(ids, positions)
        use_cross = cfg.variant != "decoder_only"
        if use_cross:
            cross_allowed = mem_mask[:, None, None, :]
        for layer in range(cfg.dec_layers):
            p = f"dec.{layer}"
            h = self._ln(x, f"{p}.ln1")
            q, k, v = (self._heads(h, f"{p}.self", w) for w in "qkv")
            if state is not None:
                if len(state.self_k) > layer:
                    k = Tensor(np.concatenate([state.self_k[layer], k.data], axis=2))
                    v = Tensor(np.concatenate([state.self_v[layer], v.data], axis=2))
                    state.self_k[layer], state.self_v[layer] = k.data, v.data
                else:
                    state.self_k.append(k.data)
                    state.self_v.append(v.data)
            x = F.add(x, self._drop(self._attend(q, k, v, allowed, f"{p}.self", trace, f"{p}.self")))
            if use_cross:
                h = self._ln(x, f"{p}.ln2")
                q = self._heads(h, f"{p}.cross", "q")
                if state is not None:
                    ck, cv = Tensor(state.cross_k[layer]), Tensor(state.cross_v[layer])
                else:
                    ck, cv = self._heads(memory, f"{p}.cross", "k"), self._heads(memory, f"{p}.cross", "v")
                a = self._attend(q, ck, cv, cross_allowed, f"{p}.cross", trace, f"{p}.cross")
                x = F.add(x, self._drop(a))
            x = F.add(x, self._drop(self._ffn(self._ln(x, f"{p}.ln3"), f"{p}.ffn")))
        return self._ln(x, "dec.ln")

    def _project(self, h: Tensor) -> Tensor:
        lead = h.shape[:-1]
        flat = F.reshape(h, (-1, h.shape[-1]))
        logits = F.add(F.matmul(flat, F.transpose(self._p("embed"))), self._p("out.b"))
        return F.reshape(logits, lead + (self.config.vocab_size,))

    def decoder_forward(self, prefix: np.ndarray, prefix_mask: np.ndarray, memory: Tensor,
                        mem_mask: np.ndarray, trace: list | None = None) -> Tensor:
        """Teacher-forced logits ``(B, T, V)`` for right-padded prefixes."""
        prefix = np.asarray(prefix, dtype=np.int64)
        b, t = prefix.shape
        pos = np.broadcast_to(np.arange(t), (b, t))
        return self._project(self._decoder_stack(prefix, pos, prefix_mask, memory, mem_mask, trace=trace))

    def decoder_only_forward(self, joined: np.ndarray, mask: np.ndarray, trace: list | None = None) -> Tensor:
        """Causal logits over right-padded ``source <SEP> target`` rows."""
        joined = np.asarray(joined, dtype=np.int64)
        for r in range(joined.shape[0]):
            n_sep = int(((joined[r] == SEP) & mask[r]).sum())
            if n_sep != 1:
                raise InputError(f"row {r}: expected exactly one <SEP>, found {n_sep}")
        b, t = joined.shape
        pos = np.broadcast_to(np.arange(t), (b, t))
        return self._project(self._decoder_stack(joined, pos, mask, None, None, trace=trace))

    # ---- training objective ----------------------------------------------------------

    def _joined(self, source: Sequence[int], target: Sequence[int]) -> tuple[list[int], int]:
        """Joined decoder-only row and the index of its first target token."""
        target = self._fit(target, self.config.max_len - 1, "target")
        room = self.config.max_len - len(target) - 1
        source = self._fit(source, max(room, 0), "source")
        return list(source) + [SEP] + list(target), len(source) + 1

    def logits_and_labels(self, sources: Sequence, targets: Sequence[Sequence[int]],
                          trace: list | None = None) -> tuple[Tensor, np.ndarray]:
        """Teacher-forced logits ``(N, V)`` with their labels (``PAD`` = unsupervised).

        Every target starts with ``<s>`` and ends with ``</s>``.
        """
        for tgt in targets:
            if len(tgt) < 2 or tgt[0] != BOS:
                raise InputError("targets must begin with <s> and hold at least one more token")
        if self.config.variant == "decoder_only":
            rows, starts = zip(*(self._joined(s, t) for s, t in zip(sources, targets)))
            ids, mask = pad_batch(rows)
            logits = self.decoder_only_forward(ids[:, :-1], mask[:, :-1], trace)
            labels = ids[:, 1:].copy()
            for r, first in enumerate(starts):
                # label j predicts token j+1; keep those after the target's <s>
                labels[r, :first] = PAD
        else:
            memory, mem_mask = self.encode_sources(sources, trace)
            ids, mask = pad_batch([self._fit(t, self.config.max_len + 1, "target") for t in targets])
            logits = self.decoder_forward(ids[:, :-1], mask[:, :-1], memory, mem_mask, trace)
            labels = ids[:, 1:]
        return F.reshape(logits, (-1, self.config.vocab_size)), labels.reshape(-1)

    def loss(self, sources: Sequence, targets: Sequence[Sequence[int]], epsilon: float = 0.1) -> Tensor:
        logits, labels = self.logits_and_labels(sources, targets)
        return label_smoothed_ce(logits, labels, epsilon, pad_id=PAD)

    def sequence_logprob(self, source, target: Sequence[int]) -> float:
        """Teacher-forced log-probability of ``target`` (without its leading ``<s>``)."""
        target = list(target)
        logits, _ = self.logits_and_labels([source], [[BOS] + target])
        # the last len(target) rows predict the target tokens
        logp = log_softmax_array(logits.data[-len(target):], axis=-1)
        return float(logp[np.arange(len(target)), target].sum())

    # ---- incremental decoding -----------------------------------------------------------

    def start(self, sources: Sequence, beam: int = 1) -> tuple[DecodeState, np.ndarray]:
        """Prepare ``len(sources) * beam`` decoding rows.

        Returns the state and the log-probabilities of the first generated
        token, shape ``(rows, V)``; rows of one source are adjacent.
        """
        cfg = self.config
        if cfg.variant == "decoder_only":
            prompts = []
            for s in sources:
                s = self._fit(s, max(cfg.max_len - 1, 0), "source")
                prompts.append(list(s) + [SEP, BOS])
            ids, mask = pad_batch(prompts, left=True)
            ids, mask = np.repeat(ids, beam, axis=0), np.repeat(mask, beam, axis=0)
            pos = np.maximum(np.cumsum(mask, axis=1) - 1, 0)
            state = DecodeState([], [], mask, pos[:, -1] + 1)
            h = self._decoder_stack(ids, pos, mask, None, None, state)
        else:
            memory, mem_mask = self.encode_sources(sources)
            state = DecodeState([], [], np.zeros((len(sources) * beam, 0), dtype=bool),
                                np.zeros(len(sources) * beam, dtype=np.int64),
                                mem_mask=np.repeat(mem_mask, beam, axis=0))
            for layer in range(cfg.dec_layers):
                p = f"dec.{layer}.cross"
                state.cross_k.append(np.repeat(self._heads(memory, p, "k").data, beam, axis=0))
                state.cross_v.append(np.repeat(self._heads(memory, p, "v").data, beam, axis=0))
            return state, self.step(state, np.full(len(sources) * beam, BOS))
        return state, log_softmax_array(self._project(h).data[:, -1, :], axis=-1)

    def step(self, state: DecodeState, tokens: np.ndarray) -> np.ndarray:
        """Feed one token per row; returns next-token log-probabilities ``(rows, V)``."""
        tokens = np.asarray(tokens, dtype=np.int64)[:, None]
        state.key_mask = np.concatenate([state.key_mask, np.ones((len(tokens), 1), dtype=bool)], axis=1)
        pos = np.minimum(state.next_pos, self.config.max_len + 1)[:, None]
        h = self._decoder_stack(tokens, pos, state.key_mask, None, state.mem_mask, state)
        state.next_pos = state.next_pos + 1
        return log_softmax_array(self._project(h).data[:, -1, :], axis=-1)

    # ---- misc ----------------------------------------------------------------------------

    def train(self, rng: np.random.Generator) -> None:
        self.training, self.rng = True, rng

    def eval(self) -> None:
        self.training, self.rng = False, None
