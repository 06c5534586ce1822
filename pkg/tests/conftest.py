import numpy as np
import pytest

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_walk(rng, T, m, scale=0.1):
    return np.cumsum(rng.normal(scale=scale, size=(T, m)), axis=0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
