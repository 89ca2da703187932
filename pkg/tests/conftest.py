import sys

import numpy as np
import pytest

from ltbmap.luminosity import CosmoParams, LuminosityCurve


@pytest.fixture(scope="session")
def curves():
    """One cached curve per Omega_Lambda, shared across tests."""
    cache = {}

    def get(omega):
        if omega not in cache:
            cache[omega] = LuminosityCurve(CosmoParams(omega))
        return cache[omega]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
