"""Greedy and beam-search decoding over a :class:`Transformer`."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .transformer import EOS, Transformer


@dataclass(frozen=True)
class Hypothesis:
    """Generated ids (without the leading ``<s>``) and their log-probability.

    The cumulative ``logprob`` never increases as tokens are appended;
    ``score`` is the length-normalised value used for the final ranking.
    """

    tokens: tuple[int, ...]
    logprob: float
    finished: bool
    length_penalty: float = 1.0

    @property
    def score(self) -> float:
        return self.logprob / max(len(self.tokens), 1) ** self.length_penalty

    @property
    def body(self) -> tuple[int, ...]:
        """Tokens with the closing ``</s>`` removed."""
        return self.tokens[:-1] if self.finished else self.tokens


def greedy_decode(model: Transformer, sources: Sequence, max_len: int) -> list[Hypothesis]:
    """Arg-max decoding, one hypothesis per source; ties go to the lowest id."""
    model.eval()
    state, logp = model.start(sources, 1)
    n = len(sources)
    cum = np.zeros(n)
    done = np.zeros(n, dtype=bool)
    seqs: list[list[int]] = [[] for _ in range(n)]
    for t in range(max_len):
        tok = np.argmax(logp, axis=1)
        for r in np.nonzero(~done)[0]:
            cum[r] = cum[r] + logp[r, tok[r]]
            seqs[r].append(int(tok[r]))
        done |= tok == EOS
        if done.all() or t == max_len - 1:
            break
        logp = model.step(state, np.where(done, EOS, tok))
    return [Hypothesis(tuple(s), float(c), bool(s and s[-1] == EOS)) for s, c in zip(seqs, cum)]


def beam_search(model: Transformer, sources: Sequence, beam_size: int, max_len: int,
                length_penalty: float = 1.0) -> list[list[Hypothesis]]:
    """Ranked hypotheses per source, best first, at most ``beam_size`` each.

    Live hypotheses are pruned to ``beam_size`` by cumulative log-probability
    (ties: earlier parent, then lower token id); those ending in ``</s>`` move
    to a result pool, as do the survivors at ``max_len``. The pool is ranked by
    ``logprob / length ** length_penalty``.
    """
    if beam_size < 1:
        raise ValueError(f"beam_size must be >= 1, got {beam_size}")
    model.eval()
    n, k = len(sources), beam_size
    state, logp = model.start(sources, k)
    vocab = logp.shape[1]
    cum = np.full((n, k), -np.inf)
    cum[:, 0] = 0.0
    seqs = np.zeros((n, k, 0), dtype=np.int64)
    pools: list[list[Hypothesis]] = [[] for _ in range(n)]
    for t in range(max_len):
        cand = (cum[:, :, None] + logp.reshape(n, k, vocab)).reshape(n, k * vocab)
        order = np.argsort(-cand, axis=1, kind="stable")[:, :k]
        vals = np.take_along_axis(cand, order, axis=1)
        parent, tok = order // vocab, order % vocab
        seqs = np.concatenate([np.take_along_axis(seqs, parent[:, :, None], axis=1), tok[:, :, None]], axis=2)
        alive = np.isfinite(vals)
        last = t == max_len - 1
        for b in range(n):
            for j in range(k):
                if alive[b, j] and (tok[b, j] == EOS or last):
                    pools[b].append(Hypothesis(tuple(int(x) for x in seqs[b, j]), float(vals[b, j]),
                                               bool(tok[b, j] == EOS), length_penalty))
        alive &= tok != EOS
        cum = np.where(alive, vals, -np.inf)
        if last or not alive.any():
            break
        rows = (np.arange(n)[:, None] * k + parent).reshape(-1)
        state.reorder(rows)
        logp = model.step(state, np.where(alive, tok, EOS).reshape(-1))
    out = []
    for pool in pools:
        ranked = sorted(pool, key=lambda h: -h.score)
        out.append(ranked[:k])
    return out
