"""Acceptance gate: one test per criterion, each printing its pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the lines, or via the
CLI: `frontlab accept`.
"""

import pytest

from frontlab import acceptance


@pytest.mark.parametrize("number", sorted(acceptance._CRITERIA))
def test_criterion(number):
    result = acceptance.run_criterion(number)
    print(result.format_line())
    assert result.passed, result.format_line()
