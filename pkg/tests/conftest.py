import numpy as np
import pytest

from charfem.mesh import DomainSpec

# (criterion, passed, detail) lines collected by the acceptance module
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def record():
    def _record(name, ok, detail=""):
        ACCEPTANCE.append((name, bool(ok), detail))
        return bool(ok)
    return _record


@pytest.fixture(scope="session")
def unit_domain():
    return DomainSpec(0.0, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
