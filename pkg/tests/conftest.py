import numpy as np
import pytest

from nsfcontact import functionals as fn
from nsfcontact import harness, solver, thermo
from nsfcontact.fields import PeriodicGrid

# filled by tests/test_acceptance.py, printed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def params():
    return thermo.ThermoParams()


@pytest.fixture(scope="session")
def contact(params):
    return fn.make_contact(params, 1.0, 2.0, 0.5)


@pytest.fixture(scope="session")
def reference_experiment(params, contact):
    """1D N=512, nu = kappa = 1e-3, alpha = 0.05, T = 0.2."""
    grid = PeriodicGrid(1, 512)
    cfg = solver.SolverConfig(nu=1e-3, kappa=1e-3, t_end=0.2)
    return harness.run_experiment(params, contact, grid, cfg, alpha=0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line[1])
