import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_field_coeffs(rng, grid, batch=(), decay=1.5):
    """Random coefficients with algebraic decay, so physical values stay O(1)."""
    shape = tuple(batch) + grid.shape
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return z * (1.0 + grid.k_abs) ** (-decay)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """``record(n, passed, detail)`` stores one summary line for criterion ``n``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(n: int, passed: bool, detail: str) -> bool:
        lines[n] = f"AC{n:<2d} {'PASS' if passed else 'FAIL'}  {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
