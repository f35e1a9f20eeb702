import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dskg.params import PhysicalParams, derive_constants  # noqa: E402
from dskg.spectral import Field, Grid  # noqa: E402


@pytest.fixture
def grid1():
    return Grid(1, 64, 20.0)


@pytest.fixture
def gaussian1(grid1):
    return Field(grid1, np.exp(-grid1.axis**2))


def gaussian(grid, amp=1.0, width=1.0, shift=0.0):
    r2 = sum((x - shift) ** 2 for x in grid.coords)
    return Field(grid, amp * np.exp(-r2 / width**2))


def make(H=0.0, lam=1.0, mass=1.0, n=1, c=1.0, **kw):
    p = PhysicalParams(n=n, H=H, lam=lam, mass=mass, c=c, **kw)
    return p, derive_constants(p)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
