"""
Which inputs does the editor need?
==================================

Trains one model per modality configuration on a reduced corpus and prints
the held-out top-1 table, overall and on the argument-replacement family.
Takes about seven minutes on one core; the acceptance suite runs the full
sized version.
"""

import logging
import tempfile

from mmedit.pipeline import ExperimentConfig, extract_all, generate_corpus, run_ablation

logging.basicConfig(level=logging.INFO, format="%(message)s")

records = extract_all(generate_corpus(seed=0, n=1000, ambiguity_rate=0.5))
out = tempfile.mkdtemp(prefix="mmedit-ablation-")
report, verdicts = run_ablation(ExperimentConfig(max_epochs=12), ["e", "eg", "ec", "ecg"], ["single_encoder"],
                                records, seeds=[0], out_dir=out)

print(f"\n{'phi':6s}{'test':>8s}{'arg_replace':>14s}{'twin':>8s}")
for phi in ("e", "eg", "ec", "ecg"):
    cells = [report.accuracy(phi, "single_encoder", 0, split) for split in ("test", "test:arg_replace", "test:twin")]
    print(f"{phi:6s}{cells[0]:8.1f}{cells[1]:14.1f}{cells[2]:8.1f}")
print("\nfull report, verdicts and checkpoints in", out)
