import pytest
from hypothesis import HealthCheck, settings

from trefftz_gibc.config import RunConfig
from trefftz_gibc.estimator import build_discretization

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def dirichlet_system(cfg):
    return build_discretization(cfg.replace(h=0.2))


@pytest.fixture(scope="session")
def gibc_system(cfg):
    return build_discretization(cfg.replace(h=0.2, mode="gibc", H=2 * 3.141592653589793 * 0.5 / 64))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
