"""Parsing MiniLang, diffing syntax trees, and extracting edit fragments."""
from .diff import (
    END_MARK, START_MARK, EditExample, EditScript, ExtractionError, annotate_context, build_example,
    corresponding_fragments, lcs_alignment, minimal_encompassing_subtree, strip_annotation, tree_diff,
)
from .minilang import Node, ParseError, lex, normalize, parse, parse_fragment, unparse

__all__ = [
    "END_MARK", "START_MARK", "EditExample", "EditScript", "ExtractionError", "Node", "ParseError",
    "annotate_context", "build_example", "corresponding_fragments", "lcs_alignment", "lex",
    "minimal_encompassing_subtree", "normalize", "parse", "parse_fragment", "strip_annotation", "tree_diff", "unparse",
]
