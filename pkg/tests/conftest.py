import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nbadmm import code_model as cm
from nbadmm.gf2m import field_new

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def gf4():
    return field_new(2)


@pytest.fixture(scope="session")
def gf8():
    return field_new(3)


@pytest.fixture(scope="session")
def toy():
    return cm.builtin_code("toy")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report: one PASS/FAIL line per criterion at the end of the run
_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Return ``report(number, ok, detail)``; records the verdict and asserts it."""
    lines = request.config.stash[_ACCEPTANCE]
    seen = []

    def report(number, ok, detail=""):
        seen.append(number)
        lines.append((number, f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {detail}"))
        assert ok, f"criterion {number}: {detail}"

    def skip(number, reason):
        seen.append(number)
        lines.append((number, f"criterion {number:2d} SKIP  {reason}"))
        pytest.skip(reason)

    report.skip = skip
    yield report
    if not seen:
        lines.append((request.node.name, f"{request.node.name} FAIL  did not complete"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines, key=lambda t: str(t[0]).zfill(3)):
            terminalreporter.write_line(text)
