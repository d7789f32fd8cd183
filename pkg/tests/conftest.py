import numpy as np
import pytest


def random_eal(rng, max_deg=4):
    from dqreg.laguerre_eal import EalParams

    lam = rng.uniform(0.05, 0.95)
    mn, mp = rng.integers(0, max_deg + 1, 2)
    return EalParams.from_free(lam, rng.normal(0, 0.7, mn), rng.normal(0, 0.7, mp))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
