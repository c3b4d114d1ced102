"""Line-delimited JSON records, extraction and dataset splits."""
from __future__ import annotations

import json
import logging
import unicodedata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..edit_extraction import ExtractionError, ParseError, build_example, normalize

log = logging.getLogger(__name__)

REQUIRED = ("id", "code_before", "code_after", "guidance")
EXTRACTED = ("e_p", "e_n", "span")


class DataError(ValueError):
    pass


def guidance_is_corrupt(text) -> bool:
    """Empty guidance, replacement characters or control bytes."""
    if not isinstance(text, str) or not text.strip():
        return True
    return any(ch == "�" or (unicodedata.category(ch) == "Cc" and ch not in "\t\n") for ch in text)


def load_jsonl(path: str | Path, require_extracted: bool = False) -> tuple[list[dict], int]:
    """Records in file order plus the number dropped for corrupt guidance.

    Missing fields and malformed lines raise :class:`DataError` naming the
    line number.
    """
    records, dropped = [], 0
    fields = REQUIRED + (EXTRACTED if require_extracted else ())
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataError(f"{path}:{lineno}: invalid JSON ({err.msg})") from None
            if not isinstance(rec, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            for f in fields:
                if f not in rec:
                    raise DataError(f"{path}:{lineno}: record is missing field {f!r}")
            if guidance_is_corrupt(rec["guidance"]):
                dropped += 1
                continue
            records.append(rec)
    if dropped:
        log.warning("dropped %d record(s) with empty or corrupted guidance from %s", dropped, path)
    return records, dropped


def save_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def extract_record(rec: dict) -> dict:
    """Copy of ``rec`` with e_p, e_n and span filled in."""
    try:
        ex = build_example(rec["code_before"], rec["code_after"], rec["guidance"])
    except (ExtractionError, ParseError) as err:
        raise DataError(f"record {rec.get('id')!r}: {err}") from None
    out = dict(rec)
    out["code_before"] = ex.context
    out["code_after"] = normalize(rec["code_after"])
    out.update(e_p=ex.e_p, e_n=ex.e_n, span=list(ex.span))
    return out


def extract_all(records: Sequence[dict]) -> list[dict]:
    return [extract_record(r) for r in records]


def split_dataset(records: Sequence[dict], seed: int,
                  fractions=(0.8, 0.1, 0.1)) -> tuple[list[dict], list[dict], list[dict]]:
    """Seeded train/valid/test partition (80/10/10 by default)."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"split fractions must sum to 1, got {fractions}")
    order = np.random.default_rng(seed).permutation(len(records))
    n_train = int(round(fractions[0] * len(records)))
    n_valid = int(round(fractions[1] * len(records)))
    parts = (order[:n_train], order[n_train:n_train + n_valid], order[n_train + n_valid:])
    return tuple([records[int(i)] for i in part] for part in parts)
