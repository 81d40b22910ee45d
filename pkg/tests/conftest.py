import pytest
from hypothesis import HealthCheck, settings

from shapes import chain_example, chain_projected

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def q1_instance():
    return chain_example()


@pytest.fixture
def q2_instance():
    return chain_projected()


def pytest_terminal_summary(terminalreporter):
    from shapes import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
