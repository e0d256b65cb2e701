import pytest
from hypothesis import HealthCheck, settings

from knv.knov import OperatorSet, load_fixtures

# invariant suites: at least 100 seeded cases per property, reproducible
settings.register_profile(
    "knv",
    max_examples=100,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("knv")


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: randomized property suites")
    config.addinivalue_line("markers", "acceptance: acceptance criteria with budgets")


@pytest.fixture(scope="session")
def fx():
    return load_fixtures()


@pytest.fixture(scope="session")
def ops(fx):
    return OperatorSet.from_fixtures(fx)


@pytest.fixture(scope="session")
def G(fx):
    return fx.symmetries
