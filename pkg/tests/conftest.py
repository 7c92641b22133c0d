import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import satlab.counter
import satlab.solver
from satlab._kernel import available_lanes, get_kernel


@pytest.fixture(params=available_lanes())
def kernel_lane(request, monkeypatch):
    """Run a test once per built kernel lane (pure Python and compiled)."""
    kern = get_kernel(request.param)
    monkeypatch.setattr(satlab.solver, "_K", kern)
    monkeypatch.setattr(satlab.counter, "_K", kern)
    return request.param
