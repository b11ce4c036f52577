"""Shared fixtures and the acceptance-criterion reporter.

Acceptance tests record one line per criterion through the `criterion`
fixture; every recorded line is echoed in the terminal summary so a full
run ends with an explicit PASS/FAIL list.
"""

import numpy as np
import pytest

from bifreg import BiFunctionalDataset, Grid

_CRITERION_LINES: list[str] = []


class CriterionRecorder:
    def check(self, number: int, description: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        line = f"CRITERION {number:2d} [{status}] {description}"
        if detail:
            line += f" :: {detail}"
        _CRITERION_LINES.append(line)
        print("\n" + line)
        assert ok, line


@pytest.fixture(scope="session")
def criterion() -> CriterionRecorder:
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_CRITERION_LINES):
        terminalreporter.write_line(line)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture()
def small_dataset(rng) -> BiFunctionalDataset:
    """30 rows, 25-point zeta grid, 40-point x grid; mildly structured."""
    zeta_grid = Grid.uniform(25, 0.0, 1.0)
    x_grid = Grid.uniform(40, 0.0, 1.0)
    zeta = rng.normal(size=(30, 25)).cumsum(axis=1) * 0.2
    x = rng.normal(size=(30, 40))
    beta = np.zeros(25)
    beta[7] = 1.5
    beta[18] = -2.0
    y = zeta @ beta + 0.05 * rng.normal(size=30)
    return BiFunctionalDataset(zeta=zeta, x=x, y=y, zeta_grid=zeta_grid, x_grid=x_grid)
