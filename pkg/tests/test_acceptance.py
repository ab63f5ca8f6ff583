"""Acceptance criteria, one test per criterion at its stated tolerance.

The one-line PASS/FAIL summaries are echoed in the pytest terminal summary.
"""

import pytest

from quadlind import acceptance

SUMMARY: list = []


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion):
    result = criterion()
    SUMMARY.append(result.line())
    print(result.line())
    assert result.passed, result.line()


def test_suite_runtime():
    # the whole suite must stay well under 5 minutes
    results = acceptance.run_all(seed=0)
    assert all(r.passed for r in results)
    assert sum(r.runtime for r in results) < 300
