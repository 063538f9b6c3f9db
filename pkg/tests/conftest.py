import numpy as np
import pytest

from ccim.cmacro import Macro, MacroConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _random_codes(rng, n, shape=(8, 2)):
    """Uniform SMF bytes, including -0."""
    return rng.integers(0, 256, size=(n,) + shape, dtype=np.uint8)


@pytest.fixture(scope="session")
def random_codes():
    return _random_codes


@pytest.fixture(scope="session")
def ideal_macro():
    return Macro(MacroConfig())


@pytest.fixture(scope="session")
def mismatch_macro():
    return Macro(MacroConfig.mismatch(seed=2024))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
