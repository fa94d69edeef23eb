from datetime import datetime, timezone

import numpy as np
import pytest

from eitsq.calibration import calibrate
from eitsq.config import ScenarioConfig
from eitsq.spectral import pair_bound

FIXED_TIME = datetime(2024, 1, 1, tzinfo=timezone.utc)

_CRITERIA: list[str] = []


def random_pairs(rng, size, scale=1.0, fill=1.0):
    """Random physical (n_plus, n_minus, m) arrays; ``fill`` scales |m| toward the bound."""
    n_p = rng.exponential(scale, size)
    n_m = rng.exponential(scale, size)
    mag = np.sqrt(pair_bound(n_p, n_m) * rng.uniform(0, fill, size))
    return n_p, n_m, mag * np.exp(2j * np.pi * rng.uniform(size=size))


@pytest.fixture(scope="session")
def default_cfg():
    return ScenarioConfig.load()


@pytest.fixture(scope="session")
def record(default_cfg):
    """Calibration of the built-in defaults, shared by every module."""
    return calibrate(default_cfg, now=FIXED_TIME)


@pytest.fixture(scope="session")
def criterion():
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""

    def report(number, title, ok, detail):
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
