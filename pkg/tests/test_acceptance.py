"""Acceptance criteria 1-9 at their stated tolerances, one test each.

Each test prints its pass/fail line; the lines are also collected into a
summary section at the end of the pytest run.
"""

import json

import pytest

from finslerlab.acceptance import CRITERIA, run_criterion

from .conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("cid", [c[0] for c in CRITERIA], ids=lambda c: f"criterion_{c}")
def test_criterion(cid, request):
    res = run_criterion(cid)
    line = res.line()
    print(line)
    request.config.stash[ACCEPTANCE_LINES].append(line)
    assert res.passed, json.dumps(res.to_dict(), default=str, indent=1)
