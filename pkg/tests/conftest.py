import numpy as np
import pytest
from scipy.linalg import expm


def dense_displacement(beta, dim):
    """D(beta) by matrix exponential in a ``dim``-level truncation."""
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    return expm(beta * a.T - np.conj(beta) * a)


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance criteria: tests marked ``acceptance(k)`` are pooled per criterion
# and summarised as one PASS/FAIL line at the end of the run.
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(k): test belongs to acceptance criterion k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if report.when == "call" or report.outcome != "passed":
        ok = report.outcome == "passed" and not hasattr(report, "wasxfail")
        key = mark.args[0]
        _CRITERIA[key] = _CRITERIA.get(key, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {key}: {'PASS' if _CRITERIA[key] else 'FAIL'}")
