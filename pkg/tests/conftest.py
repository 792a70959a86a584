from __future__ import annotations

import numpy as np
import pytest

from dynpot._backend import BACKENDS
from dynpot.scenario import Grid, parse_scenario

BACKEND_NAMES = sorted(BACKENDS)


@pytest.fixture(params=BACKEND_NAMES)
def backend(request):
    return request.param


def grid_from(rows: str, cell_size: float = 0.4) -> Grid:
    return parse_scenario(f"@cellsize {cell_size}\n" + rows.strip("\n") + "\n")


def open_grid(width: int, height: int, dest: tuple[int, int]) -> Grid:
    cells = np.ones((height, width), dtype=np.uint8)
    cells[dest[1], dest[0]] = 3
    return Grid(cells)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
