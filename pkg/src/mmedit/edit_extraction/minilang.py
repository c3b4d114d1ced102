"""MiniLang: a small Java-like language used as the subject of code edits.

Grammar::

    function  := "fn" IDENT "(" [IDENT ("," IDENT)*] ")" block
    block     := "{" statement* "}"
    statement := IDENT "=" expr ";"
               | "return" [expr] ";"
               | "if" "(" expr ")" block ["else" block]
               | call ";"
    expr      := or;  or := and ("||" and)*;  and := eq ("&&" eq)*
    eq        := rel (("==" | "!=") rel)*;  rel := add (("<" | ">") add)*
    add       := mul (("+" | "-") mul)*;  mul := unary (("*" | "/") unary)*
    unary     := "!" unary | primary
    primary   := INT | IDENT | call | "(" expr ")"
    call      := IDENT "(" [expr ("," expr)*] ")"

Every lexical token is a leaf of the tree. Interior nodes always have at least
two children, so no two nodes cover the same set of leaves.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

KEYWORDS = frozenset({"fn", "return", "if", "else"})

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>&&|\|\||==|!=|[<>+\-*/!=])|(?P<punct>[(){},;]))"
)


class ParseError(SyntaxError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at token {position})")
        self.position = position


@dataclass(frozen=True)
class Token:
    kind: str  # kw, ident, int, op, punct
    text: str
    offset: int


def lex(source: str) -> list[Token]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.lastgroup is None:
            bad = len(source[pos:]) - len(source[pos:].lstrip())
            raise ParseError(f"unexpected character {source[pos + bad]!r} at offset {pos + bad}",
                             len(tokens))
        kind = m.lastgroup
        text = m.group(kind)
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        tokens.append(Token(kind, text, m.start(m.lastgroup)))
        pos = m.end()
    return tokens


@dataclass(eq=False)
class Node:
    """Syntax tree node; leaves carry ``text`` and have no children.

    ``start``/``end`` delimit the node's half-open range of leaf indices.
    """

    kind: str
    children: list["Node"] = field(default_factory=list)
    text: str | None = None
    start: int = 0
    end: int = 0
    parent: "Node | None" = field(default=None, repr=False)

    @property
    def is_leaf(self) -> bool:
        return self.text is not None

    def __len__(self) -> int:
        return self.end - self.start

    def walk(self) -> Iterator["Node"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self) -> list["Node"]:
        return [n for n in self.walk() if n.is_leaf]

    def unparse(self) -> str:
        return " ".join(leaf.text for leaf in self.leaves())

    def sexpr(self) -> str:
        """Compact structural rendering that omits punctuation leaves."""
        if self.is_leaf:
            return self.text
        inner = [c.sexpr() for c in self.children if not (c.is_leaf and c.kind in ("punct", "kw", "op"))]
        if self.kind in ("Binary", "Unary"):
            inner.insert(0 if self.kind == "Unary" else 1,
                         next(c.text for c in self.children if c.kind == "op"))
        return f"{self.kind}({', '.join(inner)})"


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    def peek(self, k: int = 0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text and t.kind != "ident"

    def leaf(self) -> Node:
        t = self.toks[self.i]
        node = Node(t.kind, text=t.text, start=self.i, end=self.i + 1)
        self.i += 1
        return node

    def expect(self, text: str, context: str = "") -> Node:
        if not self.at(text):
            t = self.peek()
            got = f"{t.text!r}" if t else "end of input"
            raise ParseError(f"expected {text!r}{context}, found {got}", self.i)
        return self.leaf()

    def expect_kind(self, kind: str) -> Node:
        t = self.peek()
        if t is None or t.kind != kind:
            got = f"{t.text!r}" if t else "end of input"
            raise ParseError(f"expected {kind}, found {got}", self.i)
        return self.leaf()

    def make(self, kind: str, children: list[Node]) -> Node:
        node = Node(kind, children, start=children[0].start, end=children[-1].end)
        for c in children:
            c.parent = node
        return node

    # ---- grammar ----------------------------------------------------------------

    def function(self) -> Node:
        kids = [self.expect("fn"), self.expect_kind("ident"), self.expect("(")]
        if not self.at(")"):
            kids.append(self.expect_kind("ident"))
            while self.at(","):
                kids += [self.leaf(), self.expect_kind("ident")]
        kids.append(self.expect(")"))
        kids.append(self.block())
        return self.make("Function", kids)

    def block(self) -> Node:
        open_pos = self.i
        kids = [self.expect("{")]
        while not self.at("}"):
            t = self.peek()
            if t is None or not (t.kind == "ident" or t.text in ("return", "if")):
                got = f"{t.text!r}" if t else "end of input"
                raise ParseError(f"expected '}}' to close '{{' opened at token {open_pos}, found {got}",
                                 self.i)
            kids.append(self.statement())
        kids.append(self.leaf())
        return self.make("Block", kids)

    def statement(self) -> Node:
        t = self.peek()
        if t.kind == "kw" and t.text == "return":
            kids = [self.leaf()]
            if not self.at(";"):
                kids.append(self.expr())
            kids.append(self.expect(";"))
            return self.make("Return", kids)
        if t.kind == "kw" and t.text == "if":
            kids = [self.leaf(), self.expect("("), self.expr(), self.expect(")"), self.block()]
            if self.at("else"):
                kids += [self.leaf(), self.block()]
            return self.make("If", kids)
        if t.kind == "ident":
            nxt = self.peek(1)
            if nxt is not None and nxt.text == "=":
                kids = [self.leaf(), self.leaf(), self.expr(), self.expect(";")]
                return self.make("Assign", kids)
            if nxt is not None and nxt.text == "(":
                return self.make("CallStmt", [self.call(), self.expect(";")])
        raise ParseError(f"expected a statement, found {t.text!r}", self.i)

    def call(self) -> Node:
        kids = [self.expect_kind("ident"), self.expect("(")]
        if not self.at(")"):
            kids.append(self.expr())
            while self.at(","):
                kids += [self.leaf(), self.expr()]
        kids.append(self.expect(")", " to close call"))
        return self.make("Call", kids)

    _LEVELS = (("||",), ("&&",), ("==", "!="), ("<", ">"), ("+", "-"), ("*", "/"))

    def expr(self, level: int = 0) -> Node:
        if level == len(self._LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while (t := self.peek()) is not None and t.kind == "op" and t.text in self._LEVELS[level]:
            op = self.leaf()
            left = self.make("Binary", [left, op, self.expr(level + 1)])
        return left

    def unary(self) -> Node:
        if self.at("!"):
            op = self.leaf()
            return self.make("Unary", [op, self.unary()])
        return self.primary()

    def primary(self) -> Node:
        t = self.peek()
        if t is None:
            raise ParseError("expected an expression, found end of input", self.i)
        if t.kind == "int":
            return self.leaf()
        if t.kind == "ident":
            nxt = self.peek(1)
            if nxt is not None and nxt.text == "(":
                return self.call()
            return self.leaf()
        if self.at("("):
            kids = [self.leaf(), self.expr(), self.expect(")")]
            return self.make("Paren", kids)
        raise ParseError(f"expected an expression, found {t.text!r}", self.i)


def parse(source: str) -> Node:
    """Parse a single MiniLang function into its syntax tree."""
    p = _Parser(lex(source))
    root = p.function()
    if p.peek() is not None:
        raise ParseError(f"unexpected {p.peek().text!r} after end of function", p.i)
    return root


def parse_fragment(source: str) -> Node:
    """Parse a function, block, statement, expression or single token."""
    toks = lex(source)
    if not toks:
        raise ParseError("empty fragment", 0)
    first = toks[0].text
    attempts = []
    if first == "fn":
        attempts.append(_Parser.function)
    elif first == "{":
        attempts.append(_Parser.block)
    attempts += [_Parser.statement, _Parser.expr]
    last_error = None
    for rule in attempts:
        p = _Parser(toks)
        try:
            node = rule(p)
        except ParseError as err:
            last_error = err
            continue
        if p.peek() is None:
            return node
        last_error = ParseError(f"unexpected {p.peek().text!r} after fragment", p.i)
    if len(toks) == 1:
        t = toks[0]
        return Node(t.kind, text=t.text, start=0, end=1)
    raise last_error


def unparse(tree: Node) -> str:
    return tree.unparse()


def tokens_of(source: str) -> list[str]:
    return [t.text for t in lex(source)]


def normalize(source: str) -> str:
    """Canonical single-space rendering of a MiniLang fragment."""
    return " ".join(tokens_of(source))
