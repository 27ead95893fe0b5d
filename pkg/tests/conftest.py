import math

import numpy as np
import pytest

from monocert import kernels
from monocert.fields import GridSpec, Region

PI_REGION = Region(-math.pi, math.pi, -math.pi, math.pi)
GRID = GridSpec(129, 129)


@pytest.fixture(params=kernels.BACKENDS)
def backend(request, monkeypatch):
    monkeypatch.setattr(kernels, "BACKEND", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20260)


# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
