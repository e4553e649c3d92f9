from pathlib import Path

import pytest

from firmopt.generate import GraphBuilder
from firmopt.model import FirmModel

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def model_of(doc):
    return FirmModel(doc.default_graphs()[0])


@pytest.fixture
def add23():
    """Start block with Add(Const 2, Const 3) consumed by a Return."""
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.block("end", "End")
    b.const("c2", 2, "b0")
    b.const("c3", 3, "b0")
    b.op("add", "Add", "b0", "c2", "c3")
    b.op("ret", "Return", "b0", "add")
    return b.build("add23")


@pytest.fixture
def nested():
    """((2 + 3) * 4) with the product returned."""
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.block("end", "End")
    b.const("c2", 2, "b0")
    b.const("c3", 3, "b0")
    b.const("c4", 4, "b0")
    b.op("add", "Add", "b0", "c2", "c3")
    b.op("mul", "Mul", "b0", "add", "c4")
    b.op("ret", "Return", "b0", "mul")
    return b.build("nested")


@pytest.fixture
def cfg_chain():
    """b0 -> b1 (Jmp only) -> b2 (Jmp only) -> b3 (Return) -> end."""
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.block("end", "End")
    for name in ("b1", "b2", "b3"):
        b.block(name)
    b.node("j0", "Jmp", "b0")
    b.node("j1", "Jmp", "b1")
    b.node("j2", "Jmp", "b2")
    b.const("c", 1, "b0")
    b.op("ret", "Return", "b3", "c")
    b.control("b1", "j0")
    b.control("b2", "j1")
    b.control("b3", "j2")
    b.control("end", "ret")
    return b.build("chain")


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = "criterion %d: %s  %s" % (number, "PASS" if ok else "FAIL", detail)
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
