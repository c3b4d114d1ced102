"""Greedy byte-pair subword tokenizer with a word-start marker.

Every whitespace-separated word is split into characters, its first character
carrying ``MARKER``; merges are learned inside words only, so word starts are
merge barriers and decoding can restore token boundaries exactly.

Vocabulary file layout (UTF-8, one entry per line, fields tab-separated)::

    #mmedit-vocab<TAB>1
    marker<TAB>▁
    [specials]
    <pad><TAB>0            one line per special token: text, id
    [merges]
    ▁a<TAB>a              merge rules in application order: left, right
    [pieces]
    0<TAB><pad>            every piece: id, text (ids dense from 0)
"""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

MARKER = "▁"

PAD, BOS, EOS, UNK, SEP, START, END = "<pad>", "<s>", "</s>", "<unk>", "<SEP>", "<START>", "<END>"
SPECIALS = (PAD, BOS, EOS, UNK, SEP, START, END)
# rendered as literal tokens by decode; the rest are dropped
LITERAL_SPECIALS = frozenset({SEP, START, END, UNK})

FORMAT_HEADER = "#mmedit-vocab\t1"


class VocabularyError(ValueError):
    pass


@dataclass
class Vocabulary:
    pieces: list[str]
    merges: list[tuple[str, str]]
    marker: str = MARKER
    _ids: dict[str, int] = field(init=False, repr=False)
    _ranks: dict[tuple[str, str], int] = field(init=False, repr=False)
    _cache: dict[str, tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if tuple(self.pieces[: len(SPECIALS)]) != SPECIALS:
            raise VocabularyError("special tokens must occupy the first ids in fixed order")
        self._ids = {p: i for i, p in enumerate(self.pieces)}
        if len(self._ids) != len(self.pieces):
            raise VocabularyError("duplicate piece in vocabulary")
        self._ranks = {pair: r for r, pair in enumerate(self.merges)}
        self._cache = {}

    def __len__(self) -> int:
        return len(self.pieces)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.to_text() == other.to_text()

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    @property
    def unk_id(self) -> int:
        return 3

    @property
    def sep_id(self) -> int:
        return 4

    @property
    def start_id(self) -> int:
        return 5

    @property
    def end_id(self) -> int:
        return 6

    def id_of(self, piece: str) -> int:
        return self._ids.get(piece, self.unk_id)

    # ---- encode / decode --------------------------------------------------------

    def _encode_word(self, word: str) -> tuple[int, ...]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        symbols = [self.marker + word[0]] + list(word[1:])
        ranks = self._ranks
        while len(symbols) > 1:
            best, best_rank = None, None
            for pair in zip(symbols, symbols[1:]):
                r = ranks.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = pair, r
            if best is None:
                break
            merged, i = [], 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best:
                    merged.append(symbols[i] + symbols[i + 1])
                    i += 2
                else:
                    merged.append(symbols[i])
                    i += 1
            symbols = merged
        ids = tuple(self.id_of(s) for s in symbols)
        self._cache[word] = ids
        return ids

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        for word in text.split():
            out.extend(self._encode_word(word))
        return out

    def decode(self, ids: Iterable[int]) -> str:
        words: list[str] = []
        open_word = False
        n = len(self.pieces)
        for i in ids:
            i = int(i)
            if not 0 <= i < n:
                raise VocabularyError(f"invalid token id {i} (vocabulary size {n})")
            piece = self.pieces[i]
            if i < len(SPECIALS):
                if piece in LITERAL_SPECIALS:
                    words.append(piece)
                    open_word = False
                continue
            if piece.startswith(self.marker):
                words.append(piece[len(self.marker):])
                open_word = True
            elif open_word:
                words[-1] += piece
            else:
                words.append(piece)
                open_word = True
        return " ".join(words)

    def pieces_of(self, ids: Iterable[int]) -> list[str]:
        return [self.pieces[int(i)] for i in ids]

    # ---- serialisation ------------------------------------------------------------

    def to_text(self) -> str:
        lines = [FORMAT_HEADER, f"marker\t{self.marker}", "[specials]"]
        lines += [f"{s}\t{i}" for i, s in enumerate(SPECIALS)]
        lines.append("[merges]")
        lines += [f"{a}\t{b}" for a, b in self.merges]
        lines.append("[pieces]")
        lines += [f"{i}\t{p}" for i, p in enumerate(self.pieces)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Vocabulary":
        lines = text.split("\n")
        if not lines or lines[0] != FORMAT_HEADER:
            raise VocabularyError(f"not a vocabulary file (header {lines[0]!r})")
        key, _, marker = lines[1].partition("\t")
        if key != "marker" or len(marker) != 1:
            raise VocabularyError("line 2: expected marker<TAB><char>")
        section = None
        merges: list[tuple[str, str]] = []
        pieces: list[str] = []
        for lineno, line in enumerate(lines[2:], start=3):
            if not line:
                continue
            if line in ("[specials]", "[merges]", "[pieces]"):
                section = line
                continue
            a, sep, b = line.partition("\t")
            if not sep:
                raise VocabularyError(f"line {lineno}: expected two tab-separated fields")
            if section == "[specials]":
                if SPECIALS[int(b)] != a:
                    raise VocabularyError(f"line {lineno}: special {a!r} has unexpected id {b}")
            elif section == "[merges]":
                merges.append((a, b))
            elif section == "[pieces]":
                if int(a) != len(pieces):
                    raise VocabularyError(f"line {lineno}: piece ids must be dense and ordered")
                pieces.append(b)
            else:
                raise VocabularyError(f"line {lineno}: entry outside any section")
        return cls(pieces, merges, marker)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def digest(self) -> str:
        """SHA-256 of the serialised vocabulary; checkpoints store it."""
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()


def train_subword(corpus: Sequence[str], n_merges: int = 512, marker: str = MARKER) -> Vocabulary:
    """Learn ``n_merges`` greedy byte-pair merges from ``corpus``.

    At each step the most frequent adjacent pair (weighted by word frequency)
    is merged; ties go to the lexicographically smallest merged string, then
    the smallest pair. Training stops early once no pair is left.
    """
    if not corpus:
        raise VocabularyError("cannot train a tokenizer on an empty corpus")
    if n_merges < 0:
        raise VocabularyError(f"n_merges must be >= 0, got {n_merges}")
    counts = Counter(w for text in corpus for w in text.split())
    if any(marker in w for w in counts):
        raise VocabularyError(f"corpus contains the reserved word-start marker {marker!r}")
    words = {w: [marker + w[0]] + list(w[1:]) for w in counts}

    alphabet = sorted({s for syms in words.values() for s in syms} - set(SPECIALS))
    pieces = list(SPECIALS) + alphabet
    known = set(pieces)
    specials = set(SPECIALS)
    merges: list[tuple[str, str]] = []

    for _ in range(n_merges):
        pair_counts: Counter = Counter()
        for w, syms in words.items():
            c = counts[w]
            for pair in zip(syms, syms[1:]):
                pair_counts[pair] += c
        candidates = [(-c, a + b, (a, b)) for (a, b), c in pair_counts.items() if a + b not in specials]
        if not candidates:
            break
        _, joined, best = min(candidates)
        merges.append(best)
        if joined not in known:
            known.add(joined)
            pieces.append(joined)
        for w, syms in words.items():
            if len(syms) < 2:
                continue
            out, i = [], 0
            while i < len(syms):
                if i + 1 < len(syms) and (syms[i], syms[i + 1]) == best:
                    out.append(joined)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[w] = out
    return Vocabulary(pieces, merges, marker)


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())
