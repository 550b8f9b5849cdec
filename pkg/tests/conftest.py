import numpy as np
import pytest

from continual_aif.model import build_paper_model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def paper_models():
    return build_paper_model()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
