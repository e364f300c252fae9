import math
from collections import defaultdict

import pytest

from wgscatter.engine import QuadratureWellBasis

GENERAL_K = 2.5
GENERAL_N = 24

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number covered by the test")


def pytest_runtest_logreport(report):
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[marker].append(report.outcome == "passed")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_outcomes):
        ok = all(_outcomes[cid])
        n = len(_outcomes[cid])
        terminalreporter.write_line(f"criterion {cid:2d}: {'PASS' if ok else 'FAIL'} ({sum(_outcomes[cid])}/{n} checks)")


@pytest.fixture(scope="session")
def quad_basis():
    """Well modes with a quadrature varpi matrix, built once for N = 24."""
    basis = QuadratureWellBasis(math.pi, 1.0)
    basis.varpi_matrix(GENERAL_N, GENERAL_K)
    return basis
