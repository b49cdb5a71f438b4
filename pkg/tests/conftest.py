import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from borromean import MassConfig, PotentialParams, build_grid, find_spectrum
from borromean.wavefunction import faddeev_component

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

CS_LI = 22.2


@pytest.fixture(scope="session")
def cs_li():
    return MassConfig(CS_LI)


@pytest.fixture(scope="session")
def small_grid():
    """Mapped grid that already resolves the alpha = 0 spectrum to ~1e-8."""
    return build_grid(96, 1.0)


@pytest.fixture(scope="session")
def spectrum_alpha0(cs_li, small_grid):
    return find_spectrum(PotentialParams(0.32, 0.0), cs_li, small_grid, samples_per_decade=20)


@pytest.fixture(scope="session")
def ground_alpha0(spectrum_alpha0, cs_li):
    return faddeev_component(spectrum_alpha0.states[0], PotentialParams(0.32, 0.0), cs_li)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
