import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from parabolic_commutator.grid import TorusGrid

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid.square(32)


@pytest.fixture(scope="session")
def grid64():
    return TorusGrid.square(64)


def rel_err(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    scale = np.max(np.abs(b))
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else float(np.max(np.abs(a)))


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_c" not in report.nodeid:
        return
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    num = int(report.nodeid.split("::test_c")[1][:2])
    ok = report.outcome == "passed" and not hasattr(report, "wasxfail")
    detail = dict(report.user_properties).get("detail", "")
    _ACCEPTANCE.setdefault(num, []).append((ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    from test_acceptance import TITLES

    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        clauses = _ACCEPTANCE[num]
        verdict = "PASS" if all(ok for ok, _ in clauses) else "FAIL"
        details = "; ".join(d for _, d in clauses if d)
        terminalreporter.write_line(f"criterion {num:2d} {verdict}  {TITLES[num]}  [{details}]")
