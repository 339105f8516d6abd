import math

import numpy as np
import pytest

from dfx.domains import WormParams, ball_defining, worm_defining


@pytest.fixture(scope="session")
def worm_pi():
    return worm_defining(WormParams(math.pi))


@pytest.fixture(scope="session")
def worm_2pi():
    return worm_defining(WormParams(2 * math.pi))


@pytest.fixture(scope="session")
def ball():
    return ball_defining()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion and fail the test on FAIL."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(n: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
