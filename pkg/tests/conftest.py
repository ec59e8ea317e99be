import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from nl2uml.cli import sample_dataset_path  # noqa: E402
from nl2uml.dataset import load_dataset  # noqa: E402
from nl2uml.parsing import FixtureParser  # noqa: E402
from nl2uml.patterngen import load_patterns  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"
FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def parser():
    return FixtureParser.bundled()


@pytest.fixture(scope="session")
def table():
    return load_patterns()


@pytest.fixture(scope="session")
def sample():
    return load_dataset(sample_dataset_path())


settings.register_profile("repeatable", derandomize=True, deadline=None)
settings.load_profile("repeatable")

# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
