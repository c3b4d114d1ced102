"""Synthetic MiniLang edit corpus.

Each record is a small function, its edited version and a templated guidance
sentence. Edits come from a fixed set of families:

=================  =========================================  ==============
family             edit                                       e_p
=================  =========================================  ==============
``op_swap``        ``&&`` <-> ``||``                          the operator
``clause_drop``    ``A && B`` -> ``A``                        the condition
``negate``         ``x > 1`` -> ``! ( x > 1 )``               the comparison
``rename``         fixed table, e.g. ``cnt`` -> ``count``     the identifier
``if_to_return``   ``if ( c ) { return 1 ; } return 0 ;``     the body
                   -> ``return c ;``
``twin``           ``A && B`` -> ``A`` | ``B`` | ``! ( A && B )``  the condition
``arg_replace``    ``send ( m ) ;`` -> ``send ( t ) ;``       the argument
=================  =========================================  ==============

In the first five families e_p alone determines e_n. The last two make up the
``ambiguity_rate`` share of the corpus. Twins come in pairs that share
``code_before`` but apply two different edits, so only the guidance tells
them apart. In ``arg_replace`` the new argument ``t`` is the one assignment
target in the function and the guidance does not name it, so only the context
reveals it.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..edit_extraction import build_example

UNAMBIGUOUS = ("op_swap", "clause_drop", "negate", "rename", "if_to_return")
AMBIGUOUS = ("twin", "arg_replace")
FAMILIES = UNAMBIGUOUS + AMBIGUOUS
# share of ambiguous records that are argument replacements
ARG_REPLACE_SHARE = 0.2

FUNC_NAMES = ("check", "update", "compute", "handle", "process", "validate", "merge", "apply", "reset",
              "scan", "load", "store", "parse", "render", "commit", "flush")
VARS = ("a", "b", "c", "d", "x", "y", "z", "n", "k", "w", "p", "q", "size", "limit", "total", "depth",
        "width", "height", "rate", "step", "score", "level")
RENAMES = {"cnt": "count", "tmp": "temp", "idx": "index", "len": "length", "val": "value", "res": "result",
           "num": "number", "buf": "buffer", "msg": "message", "ptr": "pointer"}
ARG_OLD = ("m", "arg", "data", "item", "input", "src", "entry", "elem")
ARG_NEW = ("out", "acc", "best", "sum", "prod", "flag", "left", "right", "mid", "head", "tail", "key",
           "seed", "span", "gap", "peak")
CALLS = ("log", "emit", "trace", "notify", "record", "audit")
SINKS = ("send", "push", "write", "post")
CMP = (">", "<", "==", "!=")
RESULTS = ("r", "ok", "done", "ready", "valid", "found")
HOLE = "@"


@dataclass(frozen=True)
class Edit:
    family: str
    before: str
    after: str
    guidance: str


def _norm(text: str) -> str:
    return " ".join(text.split())


class _Gen:
    def __init__(self, rng: random.Random):
        self.r = rng

    def var(self, exclude=()) -> str:
        return self.r.choice([v for v in VARS if v not in exclude])

    def atom(self, exclude=()) -> str:
        return str(self.r.randint(0, 9)) if self.r.random() < 0.5 else self.var(exclude)

    def comparison(self) -> str:
        x = self.var()
        return f"{x} {self.r.choice(CMP)} {self.atom(exclude=(x,))}"

    def bool_pair(self) -> tuple[str, str]:
        a = self.comparison()
        b = self.comparison()
        while b == a:
            b = self.comparison()
        return a, b

    def arith(self) -> str:
        x = self.var()
        return f"{x} {self.r.choice('+-*')} {self.atom(exclude=(x,))}"

    def filler(self, assign: bool = True) -> str:
        """A statement free of boolean operators and of comparisons outside ``if``."""
        roll = self.r.random()
        if assign and roll < 0.45:
            return f"{self.var()} = {self.arith()} ;"
        if roll < 0.8:
            args = " , ".join(self.atom() for _ in range(self.r.randint(1, 2)))
            return f"{self.r.choice(CALLS)} ( {args} ) ;"
        call = f"{self.r.choice(CALLS)} ( {self.var()} ) ;"
        return f"if ( {self.comparison()} ) {{ {call} }}"

    def fillers(self, lo: int, hi: int, assign: bool = True) -> list[str]:
        return [self.filler(assign) for _ in range(self.r.randint(lo, hi))]

    def functions(self, before: list[str], after: list[str], params: list[str],
                  name: str | None = None) -> tuple[str, str]:
        """Render both versions of a function under the same name and parameters."""
        name = name or self.r.choice(FUNC_NAMES)
        head = f"fn {name} ( {' , '.join(params)} )"
        return _norm(f"{head} {{ {' '.join(before)} }}"), _norm(f"{head} {{ {' '.join(after)} }}")

    def place(self, stmt: str, lo: int = 0, hi: int = 2, assign: bool = True) -> tuple[list[str], int]:
        body = self.fillers(lo, hi, assign)
        at = self.r.randint(0, len(body))
        body.insert(at, stmt)
        return body, at

    def bool_context(self, expr: str, allow_if: bool) -> tuple[str, str]:
        """Statement template with a ``HOLE`` for a boolean expression."""
        kinds = ["assign", "return"] + (["if"] if allow_if else [])
        kind = self.r.choice(kinds)
        if kind == "assign":
            return f"{self.r.choice(RESULTS)} = {HOLE} ;", kind
        if kind == "return":
            return f"return {HOLE} ;", kind
        return f"if ( {HOLE} ) {{ {self.r.choice(CALLS)} ( {self.var()} ) ; }}", kind

    # ---- families ---------------------------------------------------------------

    def op_swap(self) -> Edit:
        a, b = self.bool_pair()
        old = self.r.choice(("&&", "||"))
        new = "||" if old == "&&" else "&&"
        hole, _ = self.bool_context("", allow_if=True)
        body, at = self.place(hole)
        before = list(body)
        before[at] = hole.replace(HOLE, f"{a} {old} {b}")
        body[at] = hole.replace(HOLE, f"{a} {new} {b}")
        params = self.r.sample(VARS, self.r.randint(1, 3))
        template = self.r.choice((
            "use {new} instead of {old} between {a} and {b}",
            "combine {a} and {b} with {new} rather than {old}",
            "the check on {a} and {b} should use {new}",
        ))
        return Edit("op_swap", *self.functions(before, body, params),
                    template.format(new=new, old=old, a=a, b=b))

    def _bool_edit(self, family: str, kind: str, a: str, b: str, op: str, hole: str,
                   body: list[str], at: int, params: list[str], fn: str) -> Edit:
        cond = f"{a} {op} {b}"
        if kind == "left":
            new, template = a, self.r.choice(("drop the {b} check and keep only {a}",
                                              "remove the clause {b} so only {a} is tested"))
        elif kind == "right":
            new, template = b, self.r.choice(("drop the {a} check and keep only {b}",
                                              "remove the clause {a} so only {b} is tested"))
        else:
            new, template = f"! ( {cond} )", self.r.choice(("negate the whole condition {a} {op} {b}",
                                                            "invert the combined test {a} {op} {b}"))
        before, after = list(body), list(body)
        before[at] = hole.replace(HOLE, cond)
        after[at] = hole.replace(HOLE, new)
        return Edit(family, *self.functions(before, after, params, fn), template.format(a=a, b=b, op=op))

    def clause_drop(self) -> Edit:
        a, b = self.bool_pair()
        hole, _ = self.bool_context("", allow_if=True)
        body, at = self.place(hole)
        return self._bool_edit("clause_drop", "left", a, b, self.r.choice(("&&", "||")), hole, body, at,
                               self.r.sample(VARS, self.r.randint(1, 3)), self.r.choice(FUNC_NAMES))

    def negate(self) -> Edit:
        cmp_ = self.comparison()
        hole, _ = self.bool_context("", allow_if=False)
        body, at = self.place(hole)
        params = self.r.sample(VARS, self.r.randint(1, 3))
        before, after = list(body), list(body)
        before[at] = hole.replace(HOLE, cmp_)
        after[at] = hole.replace(HOLE, f"! ( {cmp_} )")
        template = self.r.choice(("negate the comparison {c}", "invert the result of {c}",
                                  "the test {c} must be reversed"))
        return Edit("negate", *self.functions(before, after, params),
                    template.format(c=cmp_))

    def rename(self) -> Edit:
        old = self.r.choice(sorted(RENAMES))
        new = RENAMES[old]
        kind = self.r.random()
        if kind < 0.4:
            stmt = f"{self.r.choice(CALLS)} ( {HOLE} ) ;"
        elif kind < 0.7:
            stmt = f"{self.var()} = {HOLE} + {self.atom()} ;"
        else:
            stmt = f"return {HOLE} ;"
        body, at = self.place(stmt)
        params = self.r.sample(VARS, self.r.randint(1, 3))
        before, after = list(body), list(body)
        before[at] = stmt.replace(HOLE, old)
        after[at] = stmt.replace(HOLE, new)
        template = self.r.choice(("rename {old} to {new}", "use the clearer name {new} for {old}",
                                  "{old} should be called {new}"))
        return Edit("rename", *self.functions(before, after, params),
                    template.format(old=old, new=new))

    def if_to_return(self) -> Edit:
        cond = self.comparison() if self.r.random() < 0.5 else " && ".join(self.bool_pair())
        pre = self.fillers(0, 2)
        params = self.r.sample(VARS, self.r.randint(1, 3))
        before = pre + [f"if ( {cond} ) {{ return 1 ; }}", "return 0 ;"]
        after = pre + [f"return {cond} ;"]
        template = self.r.choice(("return the condition {c} directly instead of branching",
                                  "replace the if on {c} with a direct return"))
        return Edit("if_to_return", *self.functions(before, after, params),
                    template.format(c=cond))

    def twins(self) -> tuple[Edit, Edit]:
        a, b = self.bool_pair()
        op = self.r.choice(("&&", "||"))
        hole, _ = self.bool_context("", allow_if=False)
        body, at = self.place(hole)
        params = self.r.sample(VARS, self.r.randint(1, 3))
        kinds = self.r.sample(("left", "right", "negate"), 2)
        fn = self.r.choice(FUNC_NAMES)
        return tuple(self._bool_edit("twin", k, a, b, op, hole, body, at, params, fn) for k in kinds)

    def arg_replace(self) -> Edit:
        old = self.r.choice(ARG_OLD)
        new = self.r.choice(ARG_NEW)
        sink = self.r.choice(SINKS)
        params = [old] + self.r.sample(VARS, self.r.randint(0, 2))
        assign = f"{new} = {self.arith()} ;"
        mid = self.fillers(0, 2, assign=False)
        tail = self.fillers(0, 1, assign=False)
        before = [assign] + mid + [f"{sink} ( {old} ) ;"] + tail
        after = [assign] + mid + [f"{sink} ( {new} ) ;"] + tail
        template = self.r.choice(("pass the freshly computed value to {s} instead of {o}",
                                  "{s} should receive the new result rather than {o}",
                                  "stop sending {o} and send the value computed above"))
        return Edit("arg_replace", *self.functions(before, after, params),
                    template.format(s=sink, o=old))


def _edit_key(edit: Edit) -> tuple[str, str]:
    ex = build_example(edit.before, edit.after, edit.guidance)
    return ex.e_p, ex.e_n


def generate_corpus(seed: int, n: int, ambiguity_rate: float = 0.0) -> list[dict]:
    """``n`` records with fields id, code_before, code_after, guidance, family.

    With ``ambiguity_rate == 0`` records are resampled until every e_p maps
    to a single e_n across the corpus.
    """
    if not 0.0 <= ambiguity_rate <= 1.0:
        raise ValueError(f"ambiguity_rate must be in [0, 1], got {ambiguity_rate}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    rng = random.Random(seed)
    gen = _Gen(rng)
    n_amb = round(n * ambiguity_rate)
    n_arg = round(n_amb * ARG_REPLACE_SHARE)
    n_twin = n_amb - n_arg
    edits: list[Edit] = []
    while len(edits) < n_twin:
        pair = gen.twins()
        edits.extend(pair[: n_twin - len(edits)])
    edits += [gen.arg_replace() for _ in range(n_arg)]

    seen: dict[str, str] = {}
    makers = [getattr(gen, f) for f in UNAMBIGUOUS]
    n_unamb = n - len(edits)
    for i in range(n_unamb):
        while True:
            edit = makers[i % len(makers)]()
            if ambiguity_rate > 0:
                break
            e_p, e_n = _edit_key(edit)
            if seen.setdefault(e_p, e_n) == e_n:
                break
        edits.append(edit)
    order = list(range(len(edits)))
    rng.shuffle(order)
    width = max(len(str(n)), 4)
    return [{"id": f"r{k:0{width}d}", "code_before": edits[i].before, "code_after": edits[i].after,
             "guidance": edits[i].guidance, "family": edits[i].family} for k, i in enumerate(order)]
