import numpy as np
import pytest
from hypothesis import settings

from toricslope.geometry import make_product, make_projective_space

settings.register_profile("toricslope", max_examples=25, deadline=None, derandomize=True)
settings.load_profile("toricslope")

#: acceptance id -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def p1():
    return make_projective_space(1)


@pytest.fixture(scope="session")
def p1p1():
    p = make_projective_space(1, L=8, N=65)
    return make_product(p, p)


@pytest.fixture(scope="session")
def p1p1_small():
    p = make_projective_space(1, L=8, N=33)
    return make_product(p, p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:4} {'PASS' if ok else 'FAIL'}  {detail}")
