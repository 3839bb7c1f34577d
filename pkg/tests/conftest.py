import sys
from pathlib import Path

import numpy as np
import pytest

from mmtransmon.device import DeviceParams

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def params():
    return DeviceParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, name, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
