import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "desk: full-resolution benchmark runs, skipped unless LAGROM_DESK=1",
    )
    config.addinivalue_line(
        "markers",
        "properties: invariant property checks collected by the acceptance suite",
    )


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(0)
