import copy
import json

import pytest
from hypothesis import strategies as st

from hybridplan.domains.toy import CORPUS
from hybridplan.model import And, LinearConstraint, Or, TRUE, load_automaton


@pytest.fixture(scope="session")
def corpus():
    """name -> (automaton, n, makespan)"""
    return {k: (load_automaton(copy.deepcopy(d)), n, m) for k, (d, n, m) in CORPUS.items()}


def write_doc(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


# random formulas over a few bounded variables -------------------------------

VARS = ("x", "y", "z")
coef = st.sampled_from([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])


@st.composite
def leaves(draw, names=VARS):
    cs = {v: draw(coef) for v in names}
    cs = {v: c for v, c in cs.items() if c}
    if not cs:
        cs = {draw(st.sampled_from(names)): 1.0}
    rhs = draw(st.sampled_from([-3.0, -1.5, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0]))
    return LinearConstraint.of(cs, rhs)


def formulas(names=VARS, max_leaves=6):
    return st.recursive(
        leaves(names) | st.just(TRUE),
        lambda kids: st.builds(And, st.lists(kids, min_size=1, max_size=3).map(tuple))
        | st.builds(Or, st.lists(kids, min_size=1, max_size=3).map(tuple)),
        max_leaves=max_leaves,
    )


# acceptance report: one PASS/FAIL line per criterion, printed at the end ----

_ACCEPTANCE: dict[int, str] = {}


class _Criterion:
    def __init__(self, num, title):
        self.num, self.title, self.detail = num, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        verdict = "PASS" if exc_type is None else "FAIL"
        why = self.detail if exc_type is None else f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        line = f"criterion {self.num:>2} {verdict}  {self.title}  ({why})"
        _ACCEPTANCE[self.num] = line
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
