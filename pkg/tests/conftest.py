import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from npcure import SurvivalSample

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

HUGE = 1e6


@pytest.fixture
def toy_a():
    """Three points at x=0, the middle one censored."""
    return SurvivalSample(x=[0, 0, 0], t=[1, 2, 3], delta=[1, 0, 1])


@pytest.fixture
def toy_b():
    """Three points at x=0, the last one censored."""
    return SurvivalSample(x=[0, 0, 0], t=[1, 2, 3], delta=[1, 1, 0])


@st.composite
def samples(draw, min_n=2, max_n=30, ties=True):
    """Small random samples; integer-valued times when ``ties`` to force coincidences."""
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    x = rng.uniform(-5, 5, n)
    if ties and draw(st.booleans()):
        t = rng.integers(1, max(2, n // 2), n).astype(float)
        x = np.round(x)
    else:
        t = rng.exponential(1.0, n)
    d = (rng.random(n) < draw(st.floats(0.0, 1.0))).astype(int)
    return SurvivalSample(x=x, t=t, delta=d)


def random_sample(rng, n, ties=False):
    x = rng.uniform(-5, 5, n)
    t = rng.integers(1, max(2, n // 3), n).astype(float) if ties else rng.exponential(1.0, n)
    d = rng.integers(0, 2, n)
    return SurvivalSample(x=x, t=t, delta=d)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
