import json
from pathlib import Path

import pytest

from ctxforge import model
from ctxforge.generation import stub_from_fixtures

ROOT = Path(__file__).resolve().parents[1]
PAPER_FIXTURES = ROOT / "fixtures" / "paper"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def paper_problems():
    problems, _ = model.load_problem_set(PAPER_FIXTURES / "problems.json")
    return {p.id: p for p in problems}


@pytest.fixture(scope="session")
def paper_interests():
    _, interests = model.load_problem_set(PAPER_FIXTURES / "problems.json")
    return {i.label: i for i in interests}


@pytest.fixture(scope="session")
def paper_variants():
    data = json.loads((PAPER_FIXTURES / "stub_fixtures.json").read_text(encoding="utf-8"))
    return {(e["problem_id"], e["interest"]): e["text"] for e in data["entries"]}


@pytest.fixture()
def paper_stub():
    return stub_from_fixtures(PAPER_FIXTURES / "stub_fixtures.json")


@pytest.fixture(scope="session")
def paper_pairs(paper_problems, paper_interests, paper_variants):
    """All four published (problem, interest, variant text) triples."""
    return [
        (paper_problems[pid], paper_interests[label], text)
        for (pid, label), text in sorted(paper_variants.items())
    ]
