"""Leaf-level tree diff and extraction of the edited fragments.

The diff aligns the two leaf sequences by a longest common subsequence over
``(kind, text)`` pairs; leaves left out of the alignment are the edit
locations. The edited fragment on each side is the lowest common ancestor of
those locations, widened until the two fragments cover corresponding code.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .minilang import Node, parse

START_MARK = "<START>"
END_MARK = "<END>"


class ExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class EditScript:
    """Edited leaf indices on each side plus the aligned (unchanged) pairs."""

    before: frozenset[int]
    after: frozenset[int]
    matches: tuple[tuple[int, int], ...]

    @property
    def empty(self) -> bool:
        return not self.before and not self.after


@dataclass(frozen=True)
class EditExample:
    e_p: str
    e_n: str
    context: str
    guidance: str
    span: tuple[int, int]

    def __post_init__(self):
        if not self.guidance.strip():
            raise ExtractionError("guidance must be non-empty")


def _leaf_keys(tree: Node) -> list[tuple[str, str]]:
    return [(leaf.kind, leaf.text) for leaf in tree.leaves()]


def lcs_alignment(a: list, b: list) -> list[tuple[int, int]]:
    """Index pairs of one longest common subsequence of ``a`` and ``b``.

    Ties between skipping on either side are broken by skipping the smaller
    element, so ``lcs_alignment(b, a)`` is exactly the transposed result.
    """
    n, m = len(a), len(b)
    suf = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = suf[i], suf[i + 1]
        ai = a[i]
        for j in range(m - 1, -1, -1):
            if ai == b[j]:
                row[j] = below[j + 1] + 1
            else:
                x, y = below[j], row[j + 1]
                row[j] = x if x > y else y
    pairs = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif suf[i + 1][j] > suf[i][j + 1]:
            i += 1
        elif suf[i + 1][j] < suf[i][j + 1]:
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return pairs


def tree_diff(before: Node, after: Node) -> EditScript:
    ka, kb = _leaf_keys(before), _leaf_keys(after)
    pairs = lcs_alignment(ka, kb)
    matched_a = {i for i, _ in pairs}
    matched_b = {j for _, j in pairs}
    return EditScript(
        before=frozenset(i for i in range(len(ka)) if i not in matched_a),
        after=frozenset(j for j in range(len(kb)) if j not in matched_b),
        matches=tuple(pairs),
    )


def minimal_encompassing_subtree(tree: Node, edited: Iterable[int]) -> Node:
    """Lowest common ancestor of the given leaf indices."""
    edited = set(edited)
    if not edited:
        raise ExtractionError("no edits")
    leaves = tree.leaves()
    lo, hi = min(edited), max(edited)
    if lo < 0 or hi >= len(leaves):
        raise ExtractionError(f"leaf index out of range: {lo if lo < 0 else hi} (tree has {len(leaves)} leaves)")
    node = leaves[lo]
    # spans are contiguous and nested, so covering [lo, hi] covers every index
    while not (node.start <= lo and hi < node.end):
        node = node.parent
    return node


def _span_set(node: Node | None) -> set[int]:
    return set(range(node.start, node.end)) if node is not None else set()


def _anchor(tree: Node, other: Node, other_to_self: dict[int, int]) -> Node:
    """Region of ``tree`` next to the counterpart of ``other`` (a pure insertion/deletion)."""
    left = [other_to_self[j] for j in other_to_self if j < other.start]
    right = [other_to_self[j] for j in other_to_self if j >= other.end]
    idx = set()
    if left:
        idx.add(max(left))
    if right:
        idx.add(min(right))
    return minimal_encompassing_subtree(tree, idx) if idx else tree


def corresponding_fragments(before: Node, after: Node, script: EditScript) -> tuple[Node, Node]:
    """Smallest subtrees holding every edit whose aligned content also corresponds.

    Each side starts at the LCA of its own edited leaves; a side is then widened
    to include the counterparts of aligned leaves inside the other side's
    fragment, until neither changes.
    """
    fwd = dict(script.matches)
    bwd = {j: i for i, j in script.matches}
    p = minimal_encompassing_subtree(before, script.before) if script.before else None
    n = minimal_encompassing_subtree(after, script.after) if script.after else None
    while True:
        want_p = _span_set(p) | {bwd[j] for j in _span_set(n) if j in bwd}
        if p is None and not want_p:
            new_p = _anchor(before, n, bwd)
        else:
            new_p = minimal_encompassing_subtree(before, want_p)
        want_n = _span_set(n) | {fwd[i] for i in _span_set(new_p) if i in fwd}
        if n is None and not want_n:
            new_n = _anchor(after, new_p, fwd)
        else:
            new_n = minimal_encompassing_subtree(after, want_n)
        if new_p is p and new_n is n:
            return p, n
        p, n = new_p, new_n


def build_example(before: str, after: str, message: str) -> EditExample:
    tb, ta = parse(before), parse(after)
    script = tree_diff(tb, ta)
    if script.empty:
        raise ExtractionError("no change: before and after have identical token sequences")
    p, n = corresponding_fragments(tb, ta, script)
    return EditExample(e_p=p.unparse(), e_n=n.unparse(), context=tb.unparse(),
                       guidance=message, span=(p.start, p.end))


def annotate_context(example: EditExample) -> str:
    """Context with the edited span wrapped in ``<START>`` ... ``<END>``."""
    toks = example.context.split()
    lo, hi = example.span
    if not 0 <= lo < hi <= len(toks):
        raise ExtractionError(f"span {example.span} invalid for context of {len(toks)} tokens")
    return " ".join(toks[:lo] + [START_MARK] + toks[lo:hi] + [END_MARK] + toks[hi:])


def strip_annotation(text: str) -> str:
    return " ".join(t for t in text.split() if t not in (START_MARK, END_MARK))
