import numpy as np
import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running end-to-end checks")
    config.addinivalue_line("markers", "acceptance(n, title): acceptance criterion number and title")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None or call.when != "call" and not (call.when == "setup" and call.excinfo is not None):
        return
    n, title = mark.args
    ok = call.excinfo is None
    prev = _ACCEPTANCE.get(n, (title, True))
    _ACCEPTANCE[n] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}")
