import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from likertkit import CorrelationMatrix, RatingMatrix  # noqa: E402


def exact_one_factor(lam):
    lam = np.asarray(lam, dtype=float)
    r = np.outer(lam, lam)
    np.fill_diagonal(r, 1.0)
    return CorrelationMatrix.from_array(r)


@pytest.fixture
def four_item_r():
    return exact_one_factor([0.9, 0.8, 0.7, 0.6])


@pytest.fixture
def small_matrix():
    values = np.array([[1, 2, 3], [2, 2, 4], [3, 4, 4], [4, 5, 6], [5, 5, 7]])
    return RatingMatrix.from_array(values, items=("a", "b", "c"), stimulus_id="x")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(mod.RESULTS):
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {name}: {detail}")
