import numpy as np
import pytest

from tclab.asymptotics import default_betas, sweep
from tclab.critical import find_alpha_c
from tclab.diophantine import RotationNumber
from tclab.dynamics import SystemParams

LAM = 1e6


@pytest.fixture(scope="session")
def golden():
    return RotationNumber.golden()


@pytest.fixture(scope="session")
def critical(golden):
    return find_alpha_c(LAM, omega=golden)


@pytest.fixture(scope="session")
def base_params(golden, critical):
    return SystemParams(alpha=critical.alpha_c, beta=0.0, lam=LAM, omega=golden)


@pytest.fixture(scope="session")
def mid_params(golden):
    lo, hi = SystemParams(alpha=0.5, beta=0.5, lam=LAM, omega=golden).alpha_window()
    return SystemParams(alpha=0.5 * (lo + hi), beta=0.5, lam=LAM, omega=golden)


@pytest.fixture(scope="session")
def sweep_result(base_params, critical):
    return sweep(default_betas(), critical.alpha_c, base_params, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail):
        lines[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(lines[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
