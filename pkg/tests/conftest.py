import numpy as np
import pytest

from circext.aniso import WeightScheme
from circext.torus import AnosovMap
from circext.trigpoly import TrigPoly


@pytest.fixture(scope="session")
def cat():
    return AnosovMap.cat()


@pytest.fixture(scope="session")
def shear():
    return AnosovMap.sheared(eps=0.01)


@pytest.fixture(scope="session")
def tau():
    # cos(2 pi x1) / 2
    return TrigPoly.cos((1, 0), 0.5)


@pytest.fixture(scope="session")
def scheme(cat):
    return WeightScheme(cat.M, 0.02)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>3}: {'PASS' if ok else 'FAIL'}  {detail}")
