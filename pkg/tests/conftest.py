import numpy as np
import pytest

from chenteo.chen_teo import ChenTeoParams, derive_constants
from chenteo.verify import interior_points


@pytest.fixture(scope="session")
def c06():
    return derive_constants(ChenTeoParams(0.6, 1.0))


@pytest.fixture(scope="session")
def c_generic():
    return derive_constants(ChenTeoParams(0.63, 1.7))


@pytest.fixture(scope="session")
def pts06(c06):
    return interior_points(c06, 64, seed=11)


def rectangle_points(c, n, seed=0, margin=0.05):
    rng = np.random.default_rng(seed)
    x1, x2, x3 = c.roots
    u = margin + (1 - 2 * margin) * rng.random((n, 2))
    return np.column_stack([np.zeros(n), x2 + u[:, 0] * (x3 - x2), x1 + u[:, 1] * (x2 - x1), np.zeros(n)])


# -- one pass/fail line per acceptance criterion ---------------------------------

_CRITERIA: dict = {}


def _criterion(nodeid: str):
    if "test_acceptance.py::test_criterion_" not in nodeid:
        return None
    return int(nodeid.split("test_criterion_")[1][:2])


def pytest_runtest_logreport(report):
    n = _criterion(report.nodeid)
    if n is None:
        return
    if report.when == "call" or report.outcome == "failed":
        entry = _CRITERIA.setdefault(n, {"passed": True, "failed": []})
        if report.outcome == "failed":
            entry["passed"] = False
            entry["failed"].append(report.nodeid.split("::", 1)[1].split("[", 1)[0])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        line = f"criterion {n}: {'PASS' if e['passed'] else 'FAIL'}"
        if e["failed"]:
            names = sorted(set(e["failed"]))
            line += "  (failing: " + ", ".join(f"{n} x{e['failed'].count(n)}" for n in names) + ")"
        terminalreporter.write_line(line)
