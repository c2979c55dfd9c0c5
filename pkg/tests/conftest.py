import json
import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
GOLDEN = pathlib.Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def keyword_corpus():
    with open(FIXTURES / "keyword_corpus.json", encoding="utf-8") as fh:
        return json.load(fh)["sentences"]


# Acceptance tests register one line per criterion; the summary hook prints
# them even under captured stdout so every run shows the full scorecard.
ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def record_criterion(label: str, passed: bool) -> None:
    ACCEPTANCE_RESULTS.append((label, passed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}")
