import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def fock_vector(alpha, cutoff=80):
    """Independent truncated expansion of |alpha>, written out term by term."""
    alpha = complex(alpha)
    out = np.zeros(cutoff + 1, dtype=complex)
    for n in range(cutoff + 1):
        out[n] = math.exp(-abs(alpha) ** 2 / 2 + math.lgamma(1) - 0.5 * math.lgamma(n + 1)) * alpha ** n
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
