import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

IDENTS = ["a", "b", "c", "x", "y", "cnt", "tmp", "total"]
CALLS = ["log", "send", "emit"]


def _expr(rng, depth):
    r = rng.random()
    if depth <= 0 or r < 0.35:
        return str(rng.integers(0, 10)) if rng.random() < 0.3 else str(rng.choice(IDENTS))
    if r < 0.75:
        op = rng.choice(["+", "-", "*", "/", "&&", "||", "==", "!=", "<", ">"])
        return f"{_expr(rng, depth - 1)} {op} {_expr(rng, depth - 1)}"
    if r < 0.85:
        return f"! {_expr(rng, depth - 1)}"
    if r < 0.93:
        return f"( {_expr(rng, depth - 1)} )"
    args = " , ".join(_expr(rng, depth - 1) for _ in range(rng.integers(0, 3)))
    return f"{rng.choice(CALLS)} ( {args} )"


def _stmt(rng, depth):
    r = rng.random()
    if r < 0.35:
        return f"{rng.choice(IDENTS)} = {_expr(rng, 2)} ;"
    if r < 0.55:
        return f"return {_expr(rng, 2)} ;" if rng.random() < 0.8 else "return ;"
    if r < 0.8 and depth > 0:
        body = " ".join(_stmt(rng, depth - 1) for _ in range(rng.integers(0, 3)))
        s = f"if ( {_expr(rng, 2)} ) {{ {body} }}"
        if rng.random() < 0.4:
            s += f" else {{ {_stmt(rng, depth - 1)} }}"
        return s
    args = " , ".join(_expr(rng, 1) for _ in range(rng.integers(0, 3)))
    return f"{rng.choice(CALLS)} ( {args} ) ;"


def random_function(rng: np.random.Generator) -> str:
    params = " , ".join(rng.choice(IDENTS[:5], size=rng.integers(0, 3), replace=False))
    body = " ".join(_stmt(rng, 2) for _ in range(rng.integers(0, 5)))
    return " ".join(f"fn f{rng.integers(0, 5)} ( {params} ) {{ {body} }}".split())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, repeated at the end of the run
_CRITERIA: list[str] = []


@pytest.fixture
def criterion(capsys):
    def report(label: str, ok: bool, detail: str) -> bool:
        line = f"{label} {'PASS' if ok else 'FAIL'}: {detail}"
        _CRITERIA.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
