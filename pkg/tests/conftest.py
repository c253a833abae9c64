import pytest

from perturbed_fixpoint import gallery
from perturbed_fixpoint.problem import parse_problem

_ACCEPTANCE_LINES = []


def make_problem(D, P, T, lo=(-1.0,), hi=(1.0,), c=None, mode="quotient", **extra):
    doc = {"domain": {"box": {"lo": list(lo), "hi": list(hi)}}, "D": D, "P": P, "T": T,
           "mode": mode}
    if c is not None:
        doc["c"] = c
    doc.update(extra)
    return parse_problem(doc)


def make_finite(size, D, P, T, c=None, embedding=None, mode="quotient"):
    finite = {"size": size}
    if embedding is not None:
        finite["embedding"] = embedding
    doc = {"domain": {"finite": finite}, "D": D, "P": P, "T": T, "mode": mode}
    if c is not None:
        doc["c"] = c
    return parse_problem(doc)


@pytest.fixture(scope="session")
def instances():
    return {inst.name: inst.load() for inst in gallery.gallery()}


@pytest.fixture(scope="session")
def quarter(instances):
    return instances["quarter_map"]


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
