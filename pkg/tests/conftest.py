import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split('criterion ')[1].split(':')[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, checks: list[tuple[str, bool, str]]):
        passed = all(ok for _, ok, _ in checks)
        detail = "; ".join(f"{name} {'ok' if ok else 'FAILED'} ({text})" for name, ok, text in checks)
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {title}: {detail}"
        request.config.stash[ACCEPTANCE_KEY].append(line)
        print(line)
        assert passed, line

    return record
