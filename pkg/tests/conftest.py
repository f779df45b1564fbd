import pytest
from hypothesis import HealthCheck, settings

from circleconj import maps, numberth

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def tuned_golden():
    """Sine map with K = 0.5 tuned to the golden mean."""
    return maps.tune_parameter(0.5, numberth.cf_expand(numberth.GOLDEN, 10)).map()


@pytest.fixture(scope="session")
def rigid_golden():
    return maps.make_map("rigid", rho="golden")



@pytest.fixture(scope="session")
def profile_cache(tuned_golden):
    """Small conjugacy profile shared across hypothesis examples."""
    from circleconj import conjugacy

    return conjugacy.build_profile(tuned_golden, N=12)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
