import pytest
from hypothesis import HealthCheck, settings

from qbm_coherence.bath import BathModel, BathSpec

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def relaxation_bath():
    """Single-relaxation bath, hbar = m = gamma = 1, tau = 1/6, zero temperature."""
    return BathSpec(BathModel.SINGLE_RELAXATION_FREE, zeta=1.0, tau=1.0 / 6.0, kT=0.0)




_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one summary line per acceptance criterion."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
