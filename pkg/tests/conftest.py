from __future__ import annotations

import numpy as np
import pytest

from artifact import eigenmode, spectral

ACCEPTANCE_ROWS: list = []
CHI_REAL = 4.592977946974313  # rightmost real point of the beta=2, delta=1.5 level curve


@pytest.fixture(scope="session")
def mu2():
    return spectral.dos_measure(2.0)


@pytest.fixture(scope="session")
def real_mode():
    return eigenmode.mode_at_phase(2.0, 1.5, 1.0, CHI_REAL, N=100)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_ROWS:
        return
    terminalreporter.section("acceptance criteria")
    for crit, verdict, lines in ACCEPTANCE_ROWS:
        terminalreporter.write_line(f"{verdict}  {crit}")
        for line in lines:
            terminalreporter.write_line("      " + line)
