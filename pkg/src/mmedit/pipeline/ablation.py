"""Ablation harness: one trained model per (configuration, variant, seed) cell.

Outputs written to ``out_dir``:

``report.tsv``      one row per cell and split, modality flags as check marks
``verdicts.jsonl``  one line per evaluated record: phi, variant, seed, split,
                    id, family, prediction, target, correct
``timing.json``     wall-clock seconds per cell (kept out of the report so the
                    report is reproducible byte for byte)
``checkpoints/``    ``<phi>__<variant>__s<seed>.ckpt`` for every cell
``vocab-s<seed>.txt`` the tokenizer trained on that seed's training split
"""
from __future__ import annotations

import json
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..model import save_checkpoint
from ..tokenizer import Vocabulary, train_subword
from .consolidate import get_phi
from .data import split_dataset
from .training import ExperimentConfig, evaluate_top1, train

log = logging.getLogger(__name__)

COLUMNS = ("phi", "variant", "seed", "e_p", "G", "C", "annotated", "full_code", "split", "examples", "correct",
           "top1")
TICK, CROSS = "✓", "✗"


@dataclass(frozen=True)
class EvalRow:
    phi: str
    variant: str
    seed: int
    split: str
    examples: int
    correct: int

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.examples if self.examples else 0.0

    def cells(self) -> list[str]:
        p = get_phi(self.phi)
        flags = [TICK if on else CROSS for on in (p.edit, p.guidance, p.context, p.annotated, p.full_code)]
        return [self.phi, self.variant, str(self.seed), *flags, self.split, str(self.examples), str(self.correct),
                f"{self.accuracy:.2f}"]


@dataclass
class EvalReport:
    rows: list[EvalRow]
    seeds: list[int]
    wall_clock: dict[str, float] = field(default_factory=dict, compare=False)

    def to_tsv(self) -> str:
        lines = ["\t".join(COLUMNS)] + ["\t".join(r.cells()) for r in self.rows]
        return "\n".join(lines) + "\n"

    def accuracy(self, phi: str, variant: str, seed: int, split: str = "test") -> float:
        for r in self.rows:
            if (r.phi, r.variant, r.seed, r.split) == (phi, variant, seed, split):
                return r.accuracy
        raise KeyError(f"no row for {phi}/{variant}/seed {seed}/{split}")

    def summary(self, split: str = "test") -> list[tuple[str, str, float]]:
        """Mean accuracy over seeds per (phi, variant)."""
        groups: dict[tuple[str, str], list[float]] = defaultdict(list)
        for r in self.rows:
            if r.split == split:
                groups[(r.phi, r.variant)].append(r.accuracy)
        return [(phi, var, sum(v) / len(v)) for (phi, var), v in groups.items()]


def report_from_verdicts(verdicts: Iterable[dict], seeds: Sequence[int] | None = None) -> EvalReport:
    """Rows per (phi, variant, seed, split), plus per-family rows for each split.

    Family rows use the split name ``<split>:<family>``.
    """
    counts: dict[tuple, list[int]] = {}
    for v in verdicts:
        keys = [(v["phi"], v["variant"], v["seed"], v["split"])]
        if v.get("family"):
            keys.append((v["phi"], v["variant"], v["seed"], f"{v['split']}:{v['family']}"))
        for key in keys:
            c = counts.setdefault(key, [0, 0])
            c[0] += 1
            c[1] += bool(v["correct"])
    rows = [EvalRow(phi, var, seed, split, n, k) for (phi, var, seed, split), (n, k) in counts.items()]
    rows.sort(key=lambda r: (r.seed, r.variant, r.phi, ":" in r.split, r.split))
    seeds = list(seeds) if seeds is not None else sorted({r.seed for r in rows})
    return EvalReport(rows, seeds)


def read_verdicts(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def training_texts(records: Sequence[dict]) -> list[str]:
    return [t for r in records for t in (r["code_before"], r["code_after"], r["guidance"])]


def cell_name(phi: str, variant: str, seed: int) -> str:
    return f"{phi}__{variant}__s{seed}"


def run_ablation(base: ExperimentConfig, phis: Sequence[str], variants: Sequence[str], records: Sequence[dict],
                 seeds: Sequence[int] = (0,), out_dir: str | Path | None = None,
                 n_merges: int = 512) -> tuple[EvalReport, list[dict]]:
    """Train and evaluate every (phi, variant) cell for each seed.

    Cells of one seed share the data split and the tokenizer. ``records``
    must already carry e_p, e_n and span.
    """
    for phi in phis:
        get_phi(phi)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    verdicts: list[dict] = []
    timing: dict[str, float] = {}
    for seed in seeds:
        train_set, valid_set, test_set = split_dataset(records, seed)
        vocab = train_subword(training_texts(train_set), n_merges)
        if out is not None:
            vocab.save(out / f"vocab-s{seed}.txt")
        for variant in variants:
            for phi in phis:
                cfg = base.replace(phi=phi, seed=seed, model=base.model.replace(variant=variant).to_dict())
                name = cell_name(phi, variant, seed)
                t0 = time.perf_counter()
                log.info("training %s", name)
                result = train(cfg, train_set, valid_set, vocab)
                for split, data in (("valid", valid_set), ("test", test_set)):
                    _, rows = evaluate_top1(result.model, data, phi, vocab, cfg.beam, result.decode_len)
                    for v in rows:
                        verdicts.append({"phi": phi, "variant": variant, "seed": seed, "split": split, **v})
                timing[name] = round(time.perf_counter() - t0, 3)
                if out is not None:
                    save_checkpoint(out / "checkpoints" / f"{name}.ckpt", result.model, vocab.digest(),
                                    extra=checkpoint_extra(cfg, result))
    report = report_from_verdicts(verdicts, seeds)
    report.wall_clock = timing
    if out is not None:
        write_report(out, report, verdicts)
    return report, verdicts


def checkpoint_extra(cfg: ExperimentConfig, result) -> dict:
    return {"experiment": cfg.to_dict(), "decode_len": result.decode_len, "best_epoch": result.best_epoch,
            "best_valid": result.best_valid, "epochs_run": len(result.log), "stopped": result.stopped}


def write_report(out_dir: str | Path, report: EvalReport, verdicts: Sequence[dict]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.tsv").write_text(report.to_tsv(), encoding="utf-8")
    with open(out / "verdicts.jsonl", "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps(v, ensure_ascii=False, sort_keys=True) + "\n")
    (out / "timing.json").write_text(json.dumps(report.wall_clock, indent=1, sort_keys=True) + "\n",
                                     encoding="utf-8")


def load_vocab_for(out_dir: str | Path, seed: int) -> Vocabulary:
    return Vocabulary.load(Path(out_dir) / f"vocab-s{seed}.txt")
