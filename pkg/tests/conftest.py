import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mlsif.series import TimeSeries  # noqa: E402

TOY_GAPS_STAGE1 = [5, 100, 110, 180, 220, 221]
TOY_GAPS_STAGE2 = [30, 31, 40, 75, 76, 77, 78, 150, 151, 152]


def toy_series() -> TimeSeries:
    """240 points split into ten pieces of 24; pieces 2, 4 and 7 are above 10% missing."""
    t = np.arange(240)
    x = np.sin(2 * np.pi * t / 24) + 0.01 * t
    x[TOY_GAPS_STAGE1 + TOY_GAPS_STAGE2] = np.nan
    return TimeSeries(x)


@pytest.fixture
def toy():
    return toy_series()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One PASS/FAIL line per acceptance criterion, repeated in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
