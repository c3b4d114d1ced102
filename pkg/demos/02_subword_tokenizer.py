"""
Subword pieces that decode back to code
=======================================

"""

from mmedit.pipeline import generate_corpus
from mmedit.pipeline.ablation import training_texts
from mmedit.tokenizer import train_subword

records = generate_corpus(seed=0, n=300, ambiguity_rate=0.5)
texts = training_texts(records)

# merges are learned inside words; the marker flags a word start
for n_merges in (0, 64, 512):
    vocab = train_subword(texts, n_merges)
    ids = vocab.encode(records[0]["code_before"])
    print(f"{n_merges:4d} merges, {len(vocab):4d} pieces, {len(ids):3d} ids for the first function")

print(" ".join(vocab.pieces_of(ids)))
print(vocab.decode(ids) == records[0]["code_before"])

# unseen characters become <unk>; everything else round-trips
print(vocab.decode(vocab.encode("fn f ( ) { return ü ; }")))
print(all(vocab.decode(vocab.encode(t)) == " ".join(t.split()) for t in texts))
