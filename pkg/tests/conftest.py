import pytest

from affinecsp.constructions import k4, petersen, tseitin_or, unit_charge
from affinecsp.groups import cyclic

from helpers import ACCEPTANCE


@pytest.fixture(scope="session")
def z2():
    return cyclic(2)


@pytest.fixture(scope="session")
def z3():
    return cyclic(3)


@pytest.fixture(scope="session")
def k4_or(z2, z3):
    h = k4()
    return tseitin_or(h, (z2, z3), (unit_charge(h, z2), unit_charge(h, z3)))


@pytest.fixture(scope="session")
def petersen_graph():
    return petersen()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        if n in ACCEPTANCE:
            ok, note = ACCEPTANCE[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {note}")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: NOT RUN")
