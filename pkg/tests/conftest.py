import numpy as np
import pytest

from billiard_orbits.geometry import bumped_ellipsoid, ellipsoid, unit_ball

_ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.outcome == "passed" else "FAIL"
        lines = [ln for ln in rep.capstdout.splitlines() if ln.startswith(("PASS", "FAIL"))]
        detail = lines[-1].split(": ", 1)[-1] if lines else item.name
        _ACCEPTANCE.append((mark.args[0], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{status}  {label}: {detail}")


@pytest.fixture(scope="session")
def sphere3():
    return unit_ball(3)


@pytest.fixture(scope="session")
def generic_ellipsoid():
    return ellipsoid(1.0, 1.3, 1.7)


@pytest.fixture(scope="session")
def bumped():
    return bumped_ellipsoid((1.0, 1.25, 1.6), 0.05, (1.0, -1.0, 0.5))


def regular_polygon(p, k=1, frame=None, radius=1.0):
    """Regular p-gon (rotation number k) on a great circle spanned by the frame rows."""
    if frame is None:
        frame = np.eye(3)[:2]
    ang = 2 * np.pi * k * np.arange(p) / p
    return radius * (np.cos(ang)[:, None] * frame[0] + np.sin(ang)[:, None] * frame[1])
