import re

import pytest

from freb.ingest import save_dataset
from freb.toydata import build_sorted_dataset, build_toy_dataset

_ACCEPTANCE = {}
_ACCEPTANCE_PATTERN = re.compile(r"test_(p\d+)_")


@pytest.fixture(scope="session")
def toy_instances():
    return build_toy_dataset()


@pytest.fixture(scope="session")
def sorted_instances():
    return build_sorted_dataset()


@pytest.fixture(scope="session")
def toy_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("datasets") / "toy.jsonl"
    save_dataset(build_toy_dataset(), path)
    return path


@pytest.fixture(scope="session")
def sorted_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("datasets-sorted") / "toy_sorted.jsonl"
    save_dataset(build_sorted_dataset(), path)
    return path


def pytest_runtest_logreport(report):
    # Track acceptance-suite outcomes so the summary can print one
    # pass/fail line per criterion.
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    match = _ACCEPTANCE_PATTERN.match(report.nodeid.rsplit("::", 1)[-1])
    if match:
        _ACCEPTANCE[match.group(1).upper()] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for pid in sorted(_ACCEPTANCE, key=lambda p: int(p[1:])):
        outcome = "PASS" if _ACCEPTANCE[pid] == "passed" else _ACCEPTANCE[pid].upper()
        terminalreporter.write_line(f"{pid}: {outcome}")
