"""
Train a small editor and ask it for patches
===========================================

About four minutes on one core.
"""

import logging

from mmedit.model import ModelConfig, beam_search
from mmedit.pipeline import ExperimentConfig, consolidate, extract_all, generate_corpus, split_dataset, train
from mmedit.pipeline.ablation import training_texts
from mmedit.tokenizer import train_subword

logging.basicConfig(level=logging.INFO, format="%(message)s")

records = extract_all(generate_corpus(seed=1, n=800, ambiguity_rate=0.0))
train_set, valid_set, test_set = split_dataset(records, seed=0)
vocab = train_subword(training_texts(train_set), 256)

config = ExperimentConfig(phi="ecg", model=ModelConfig(), max_epochs=25, seed=0)
result = train(config, train_set, valid_set, vocab)
print(f"best epoch {result.best_epoch}, valid top-1 {result.best_valid:.1f}%")

# top three hypotheses for a few held-out edits
model = result.model
for rec in test_set[:4]:
    source, _ = consolidate(rec, "ecg", vocab, max_len=model.config.max_len)
    hyps = beam_search(model, [source], 3, result.decode_len)[0]
    print()
    print("guidance:", rec["guidance"])
    print("e_p     :", rec["e_p"])
    print("gold    :", rec["e_n"])
    for h in hyps:
        print(f"  {h.score:7.3f}  {vocab.decode(h.body)}")
