import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_function
from mmedit.edit_extraction import (
    END_MARK, START_MARK, EditExample, ExtractionError, ParseError, annotate_context, build_example,
    lcs_alignment, minimal_encompassing_subtree, normalize, parse, parse_fragment, strip_annotation,
    tree_diff,
)


# ---- parsing --------------------------------------------------------------------

def test_parse_return_function():
    tree = parse("fn f ( ) { return x ; }")
    assert tree.sexpr() == "Function(f, Block(Return(x)))"


def test_parse_empty_body():
    assert parse("fn f ( ) { }").sexpr() == "Function(f, Block())"


def test_parse_error_reports_unmatched_brace():
    with pytest.raises(ParseError, match=r"close '\{' opened at token 4") as info:
        parse("fn f ( ) { return ; ;")
    assert info.value.position == 7


def test_precedence():
    tree = parse("fn f ( ) { return a || b && ! c == 1 + 2 * d ; }")
    assert tree.sexpr() == (
        "Function(f, Block(Return(Binary(a, ||, Binary(b, &&, Binary(Unary(!, c), ==, "
        "Binary(1, +, Binary(2, *, d))))))))"
    )


def test_lex_error_has_position():
    with pytest.raises(ParseError, match="'@'"):
        parse("fn f ( ) { x = @ ; }")


def _check_tree(node):
    if node.is_leaf:
        assert not node.children and node.end - node.start == 1
        return
    assert len(node.children) >= 2
    pos = node.start
    for c in node.children:
        assert c.start == pos and c.parent is node
        _check_tree(c)
        pos = c.end
    assert pos == node.end


def test_unparse_parse_identity_and_span_partition(rng):
    for _ in range(300):
        src = random_function(rng)
        tree = parse(src)
        _check_tree(tree)
        assert tree.unparse() == src
        assert parse("\n  ".join(src.split(" "))).unparse() == src


def test_parse_fragment_kinds():
    assert parse_fragment("a > 0 && b").kind == "Binary"
    assert parse_fragment("{ return ; }").kind == "Block"
    assert parse_fragment("if ( a ) { }").kind == "If"
    assert parse_fragment("x").kind == "ident"


# ---- tree diff -------------------------------------------------------------------

def brute_lcs_length(a, b):
    best = 0
    for r in range(min(len(a), len(b)), 0, -1):
        for idx in itertools.combinations(range(len(a)), r):
            sub = [a[i] for i in idx]
            it = iter(b)
            if all(any(x == y for y in it) for x in sub):
                return r
    return best


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("abc"), max_size=7), st.lists(st.sampled_from("abc"), max_size=7))
def test_lcs_alignment_is_a_longest_common_subsequence(a, b):
    pairs = lcs_alignment(a, b)
    assert all(a[i] == b[j] for i, j in pairs)
    assert all(i1 < i2 and j1 < j2 for (i1, j1), (i2, j2) in zip(pairs, pairs[1:]))
    assert len(pairs) == brute_lcs_length(a, b)
    assert lcs_alignment(b, a) == [(j, i) for i, j in pairs]


def test_identical_trees_give_empty_script():
    t = parse("fn f ( a ) { return a + 1 ; }")
    assert tree_diff(t, parse("fn f ( a ) { return a + 1 ; }")).empty


def test_single_literal_change():
    s = tree_diff(parse("fn f ( ) { x = 1 ; }"), parse("fn f ( ) { x = 2 ; }"))
    assert s.before == {7} and s.after == {7}


def test_inserted_statement_only_marks_after_side():
    before = parse("fn f ( a ) { log ( a ) ; }")
    after = parse("fn f ( a ) { log ( a ) ; send ( a , 1 ) ; }")
    s = tree_diff(before, after)
    assert s.before == set()
    assert sorted(s.after) == list(range(11, 18))


def test_diff_roles_swap(rng):
    for _ in range(200):
        a, b = parse(random_function(rng)), parse(random_function(rng))
        s, r = tree_diff(a, b), tree_diff(b, a)
        assert s.before == r.after and s.after == r.before


# ---- encompassing subtree ---------------------------------------------------------

def brute_force_subtree(tree, edited):
    containing = [n for n in tree.walk() if all(n.start <= i < n.end for i in edited)]
    return min(containing, key=len)


def test_lca_matches_brute_force_on_random_instances(rng):
    for _ in range(500):
        tree = parse(random_function(rng))
        n = tree.end
        k = int(rng.integers(1, min(n, 4) + 1))
        edited = set(rng.choice(n, size=k, replace=False).tolist())
        assert minimal_encompassing_subtree(tree, edited) is brute_force_subtree(tree, edited)


def test_lca_special_cases():
    tree = parse("fn f ( a ) { x = a ; y = 2 ; }")
    assert minimal_encompassing_subtree(tree, range(tree.end)) is tree
    leaf = minimal_encompassing_subtree(tree, {8})
    assert leaf.is_leaf and leaf.text == "a"
    block = minimal_encompassing_subtree(tree, {8, 12})
    assert block.kind == "Block" and block is brute_force_subtree(tree, {8, 12})
    stmt = minimal_encompassing_subtree(tree, {6, 9})
    assert stmt.kind == "Assign" and stmt.unparse() == "x = a ;"
    with pytest.raises(ExtractionError, match="no edits"):
        minimal_encompassing_subtree(tree, set())


# ---- example construction ------------------------------------------------------------

def test_single_leaf_edit_example():
    before = "fn f ( a ) { y = a ; log ( y ) ; return x ; }"
    ex = build_example(before, before.replace("return x", "return y"), "return y instead")
    assert (ex.e_p, ex.e_n) == ("x", "y")
    assert ex.context == before
    assert ex.guidance == "return y instead"
    assert ex.context.split()[ex.span[0]:ex.span[1]] == ["x"]


def test_statement_rewrite_takes_whole_statements():
    ex = build_example("fn f ( a ) { x = 1 ; }", "fn f ( a ) { return 2 ; }", "rewrite")
    assert ex.e_p == "x = 1 ;" and ex.e_n == "return 2 ;"
    ex = build_example("fn f ( a ) { x = 1 ; }", "fn f ( a ) { x = 1 ; return x ; }", "append")
    assert ex.e_p == "{ x = 1 ; }" and ex.e_n == "{ x = 1 ; return x ; }"


def test_identical_sources_rejected():
    with pytest.raises(ExtractionError, match="no change"):
        build_example("fn f ( ) { }", "fn  f ( )  { }", "nothing")


def test_fragments_correspond_for_pure_deletion_and_insertion():
    ex = build_example("fn f ( a , b ) { r = a > 0 && b == 1 ; }", "fn f ( a , b ) { r = a > 0 ; }", "drop")
    assert (ex.e_p, ex.e_n) == ("a > 0 && b == 1", "a > 0")
    ex = build_example("fn f ( a ) { return a > 0 ; }", "fn f ( a ) { return ! ( a > 0 ) ; }", "negate")
    assert (ex.e_p, ex.e_n) == ("a > 0", "! ( a > 0 )")
    ex = build_example("fn f ( a ) { if ( a > 0 ) { return 1 ; } return 0 ; }",
                       "fn f ( a ) { return a > 0 ; }", "refactor")
    assert ex.e_p == "{ if ( a > 0 ) { return 1 ; } return 0 ; }" and ex.e_n == "{ return a > 0 ; }"


def test_random_edit_examples_are_consistent(rng):
    for _ in range(200):
        a, b = random_function(rng), random_function(rng)
        if normalize(a) == normalize(b):
            continue
        ex = build_example(a, b, "g")
        lo, hi = ex.span
        assert " ".join(ex.context.split()[lo:hi]) == ex.e_p
        assert ex.e_p != ex.e_n
        parse_fragment(ex.e_p)
        parse_fragment(ex.e_n)
        parse(ex.context)


def test_empty_guidance_rejected():
    with pytest.raises(ExtractionError):
        EditExample("x", "y", "fn f ( ) { }", "  ", (0, 1))


# ---- annotation ------------------------------------------------------------------------

def test_annotation_round_trip_and_extremes(rng):
    ex = build_example("fn f ( ) { x = 1 ; }", "fn f ( ) { x = 2 ; }", "g")
    ann = annotate_context(ex)
    assert ann == f"fn f ( ) {{ x = {START_MARK} 1 {END_MARK} ; }}"
    assert strip_annotation(ann) == ex.context
    whole = EditExample(ex.context, "fn g ( ) { }", ex.context, "g", (0, len(ex.context.split())))
    toks = annotate_context(whole).split()
    assert toks[0] == START_MARK and toks[-1] == END_MARK


def test_annotation_brackets_e_p_on_random_examples(rng):
    done = 0
    while done < 500:
        a, b = random_function(rng), random_function(rng)
        if normalize(a) == normalize(b):
            continue
        ex = build_example(a, b, "g")
        toks = annotate_context(ex).split()
        inner = toks[toks.index(START_MARK) + 1:toks.index(END_MARK)]
        assert " ".join(inner) == ex.e_p
        assert strip_annotation(" ".join(toks)) == ex.context
        done += 1
