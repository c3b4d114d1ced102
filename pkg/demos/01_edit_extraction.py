"""
From a code change to model inputs
==================================

"""

from mmedit.edit_extraction import annotate_context, build_example, parse, tree_diff
from mmedit.pipeline import consolidate
from mmedit.tokenizer import train_subword

before = "fn total ( a , b ) { s = a + b ; log ( s ) ; return s ; }"
after = "fn total ( a , b ) { s = a - b ; log ( s ) ; return s ; }"
guidance = "subtract b instead of adding it"

# the parser gives one leaf per lexical token
tree = parse(before)
print(tree.sexpr())

# leaves outside the longest common subsequence are the edits
script = tree_diff(tree, parse(after))
print("edited leaves:", sorted(script.before), "->", sorted(script.after))

# e_p / e_n are the smallest subtrees holding every edit
ex = build_example(before, after, guidance)
print("e_p:", ex.e_p)
print("e_n:", ex.e_n)
print("annotated context:", annotate_context(ex))

# a tokenizer trained on a single function is enough to look at the encodings
vocab = train_subword([before, after, guidance], 40)
record = {"id": "demo", "e_p": ex.e_p, "e_n": ex.e_n, "guidance": guidance, "code_before": before,
          "code_after": after, "span": list(ex.span)}
for phi in ("e", "eg", "ecg", "cg_dag", "full_code_g"):
    source, target = consolidate(record, phi, vocab)
    print(f"{phi:12s}", " ".join(vocab.pieces_of(source)))
    print(f"{'':12s}", "->", vocab.decode(target))
