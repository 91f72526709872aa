import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import BLOB_MEANS, make_blobs  # noqa: E402


@pytest.fixture
def blobs():
    return make_blobs(100, seed=3)


@pytest.fixture
def separable_blobs():
    """Three well-separated 2-D blobs (train, test)."""
    means = 10.0 * BLOB_MEANS
    return make_blobs(60, means, 0.5, seed=1), make_blobs(40, means, 0.5, seed=2)


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    from test_acceptance import TITLES

    terminalreporter.section("acceptance criteria")
    for criterion in sorted(results):
        clauses = results[criterion]
        status = "PASS" if all(ok for _, ok, _ in clauses) else "FAIL"
        terminalreporter.write_line(f"[{status}] {criterion}. {TITLES[criterion]}")
        for clause, ok, detail in clauses:
            terminalreporter.write_line(f"    {'ok  ' if ok else 'FAIL'} {clause}: {detail}")
