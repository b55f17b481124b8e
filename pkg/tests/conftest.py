import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_block(rng, L, T, complex_=False):
    x = rng.standard_normal((L, T))
    if complex_:
        x = x + 1j * rng.standard_normal((L, T))
    return x


def random_vector(rng, L, complex_=False):
    v = rng.standard_normal(L)
    if complex_:
        v = v + 1j * rng.standard_normal(L)
    return v


def sub_gaussian_mixture(rng, L, T, complex_=False):
    """Uniform sources through a random well-conditioned mixing matrix."""
    s = rng.uniform(-np.sqrt(3), np.sqrt(3), (L, T))
    H = rng.standard_normal((L, L))
    if complex_:
        s = (s + 1j * rng.uniform(-np.sqrt(3), np.sqrt(3), (L, T))) / np.sqrt(2)
        H = H + 1j * rng.standard_normal((L, L))
    return H @ s


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
