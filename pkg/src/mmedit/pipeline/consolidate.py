"""Modality configurations and their model inputs.

Retained modalities always appear in the order e_p, G, C with one ``<s>``
between neighbours. Annotated configurations use C with the edited span
wrapped in ``<START>``/``<END>``; full-code configurations predict the whole
edited function instead of e_n.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from ..edit_extraction import END_MARK, START_MARK, EditExample, annotate_context
from ..tokenizer import Vocabulary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Phi:
    name: str
    edit: bool
    guidance: bool
    context: bool
    annotated: bool = False
    full_code: bool = False

    @property
    def modalities(self) -> tuple[str, ...]:
        return tuple(m for m, on in (("e_p", self.edit), ("guidance", self.guidance),
                                     ("context", self.context)) if on)


PHIS = {p.name: p for p in (
    Phi("c", False, False, True),
    Phi("cg", False, True, True),
    Phi("c_dag", False, False, True, annotated=True),
    Phi("cg_dag", False, True, True, annotated=True),
    Phi("e", True, False, False),
    Phi("eg", True, True, False),
    Phi("ec", True, False, True),
    Phi("ecg", True, True, True),
    Phi("full_code", False, False, True, full_code=True),
    Phi("full_code_g", False, True, True, full_code=True),
)}


class ConsolidationError(ValueError):
    pass


def get_phi(name: str) -> Phi:
    try:
        return PHIS[name]
    except KeyError:
        raise ConsolidationError(f"unknown configuration {name!r}; expected one of {', '.join(PHIS)}") from None


def encode_marked(vocab: Vocabulary, text: str) -> list[int]:
    """Encode text whose ``<START>``/``<END>`` words become the marker ids."""
    out: list[int] = []
    for word in text.split():
        if word == START_MARK:
            out.append(vocab.start_id)
        elif word == END_MARK:
            out.append(vocab.end_id)
        else:
            out.extend(vocab.encode(word))
    return out


def _field(record: dict, name: str, phi: Phi) -> str:
    value = record.get(name)
    if value is None or (isinstance(value, str) and not value.strip() and name != "guidance"):
        raise ConsolidationError(f"configuration {phi.name} needs field {name!r}, missing in record "
                                 f"{record.get('id')!r}")
    return value


def modality_ids(record: dict, phi: Phi, vocab: Vocabulary) -> list[list[int]]:
    """Token ids of each retained modality, in e_p, G, C order."""
    out = []
    if phi.edit:
        out.append(vocab.encode(_field(record, "e_p", phi)))
    if phi.guidance:
        out.append(vocab.encode(_field(record, "guidance", phi)))
    if phi.context:
        if phi.annotated:
            span = _field(record, "span", phi)
            ex = EditExample(record.get("e_p", ""), record.get("e_n", ""), _field(record, "code_before", phi),
                             record.get("guidance") or "-", tuple(span))
            out.append(encode_marked(vocab, annotate_context(ex)))
        else:
            out.append(vocab.encode(_field(record, "code_before", phi)))
    return out


def target_text(record: dict, phi: Phi) -> str:
    return _field(record, "code_after" if phi.full_code else "e_n", phi)


def consolidate(record: dict, phi: Phi | str, vocab: Vocabulary, variant: str = "single_encoder",
                max_len: int | None = None):
    """``(source, target)`` model inputs for one record.

    ``source`` is a flat id list joined with ``<s>`` (a list of per-modality
    lists for ``multi_encoder``); ``target`` is ``<s> ... </s>``. With
    ``max_len`` the context is cut from its tail so the source fits (for
    ``decoder_only`` the joined ``source <SEP> target`` row must fit).
    """
    phi = get_phi(phi) if isinstance(phi, str) else phi
    parts = modality_ids(record, phi, vocab)
    target = [vocab.bos_id] + vocab.encode(target_text(record, phi)) + [vocab.eos_id]
    if max_len is not None:
        if variant == "multi_encoder":
            budget = max_len
        else:
            budget = max_len - (len(parts) - 1) - sum(len(p) for p in parts[:-1])
            if variant == "decoder_only":
                budget -= len(target) + 1
        if phi.context and len(parts[-1]) > budget:
            log.warning("record %s: context truncated from %d to %d tokens", record.get("id"),
                        len(parts[-1]), max(budget, 0))
            parts[-1] = parts[-1][:max(budget, 0)]
    if variant == "multi_encoder":
        return parts, target
    source: list[int] = []
    for i, p in enumerate(parts):
        if i:
            source.append(vocab.bos_id)
        source.extend(p)
    return source, target


def joined_sequence(source: list[int], target: list[int], vocab: Vocabulary) -> list[int]:
    """The single decoder-only row ``source <SEP> target``."""
    return list(source) + [vocab.sep_id] + list(target)
