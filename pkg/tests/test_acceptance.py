"""One test per acceptance criterion; each prints its pass/fail line."""

import pytest

from mckm.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, capsys):
    res = run_criterion(number)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail
