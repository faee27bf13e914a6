import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bdgsoliton.scattering_data import Background, Soliton, random_spec, validate

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def kink():
    """d=1, m=1, Delta_-=1, theta=pi/2 at the origin: Delta(x) = -tanh(x)."""
    return validate(Background(1.0, np.eye(1)), [Soliton(np.pi / 2, np.array([1.0]), 0.0)])


@pytest.fixture
def spec3(rng):
    return random_spec(3, 2, rng, spacing=4.0)


def spec_from_seed(seed, n=3, d=2, symmetry="nonsymmetric", spacing=3.0):
    return random_spec(n, d, np.random.default_rng(seed), symmetry=symmetry, spacing=spacing)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[k])
