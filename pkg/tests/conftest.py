import numpy as np
import pytest

from impulseduff import (ImpulseSchedule, SystemConfig, TrigPoly,
                         compute_special_functions)


#: one PASS/FAIL line per acceptance criterion, echoed after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def zero_polys(n):
    return tuple(TrigPoly() for _ in range(2 * n + 1))


def make_config(n=1, t1=0.25, t2=0.5, coefficients=None, **kw):
    if coefficients is None:
        coefficients = zero_polys(n)
    kw.setdefault("abs_tol", 1e-12)
    kw.setdefault("rel_tol", 1e-12)
    kw.setdefault("max_step", min(0.1, t1, t2 - t1, 1.0 - t2))
    return SystemConfig(n=n, coefficients=coefficients,
                        schedule=ImpulseSchedule(t1, t2), **kw)


def forced_coeffs(n=1, amp=0.1):
    """p_1(t) = amp * cos(2 pi t), all other coefficients zero."""
    out = [TrigPoly() for _ in range(2 * n + 1)]
    out[1] = TrigPoly(0.0, ((amp, 0.0),))
    return tuple(out)


@pytest.fixture(scope="session")
def sf1():
    return compute_special_functions(1)


@pytest.fixture(scope="session")
def sf2():
    return compute_special_functions(2)


@pytest.fixture(scope="session")
def sf3():
    return compute_special_functions(3)


@pytest.fixture(scope="session")
def unforced_cfg():
    return make_config()


@pytest.fixture(scope="session")
def forced_cfg():
    return make_config(coefficients=forced_coeffs())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260824)
