from datetime import date

import numpy as np
import pytest

from stattrade.datagen import GbmSpec, gbm_series


@pytest.fixture(scope="session")
def gbm_small():
    """Ten post-2016 days of 15s GBM bars."""
    return gbm_series(GbmSpec(days=10, seed=11))


@pytest.fixture(scope="session")
def gbm_pre2016():
    return gbm_series(GbmSpec(days=3, seed=5, start=date(2015, 3, 2)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
