"""Acceptance criteria 1-13 at their stated tolerances and runtime limits.

Each test prints one ``criterion N PASS|FAIL ...`` line to the terminal.
The criteria are implemented in :mod:`horolab.acceptance` and are also
available as ``horolab acceptance``.
"""

import pytest

from horolab.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion-{n:02d}")
def test_criterion(number, tmp_path, capsys):
    result = run_criterion(number, seed=0, out_dir=str(tmp_path))
    with capsys.disabled():
        print(f"\n{result.line()}")
    assert result.passed, result.line()
