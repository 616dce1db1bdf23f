import time

import numpy as np
import pytest

from bdg2gl.harness import SweepConfig, reference_coefficients, run_point
from bdg2gl.model import LatticeGrid, ModelParams, Potential

# acceptance criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")


@pytest.fixture(scope="session")
def gaussian():
    return Potential.gaussian(20.0, 0.25)


@pytest.fixture(scope="session")
def params(gaussian):
    return ModelParams(gaussian, 1.0, D=1.0, h=0.2)


@pytest.fixture(scope="session")
def reference(params):
    """(reference gapdata, GL coefficients) for the Gaussian model."""
    return reference_coefficients(params)


@pytest.fixture(scope="session")
def ref_params(params, reference):
    return params.with_beta_c(reference[0].beta_c)


@pytest.fixture(scope="session")
def small_grid():
    return LatticeGrid.torus(32, 0.25)


@pytest.fixture(scope="session")
def bdg_point(params, reference):
    """Converged lattice BdG solution at h = 0.2, n = 256: (row, report, solution, params)."""
    from bdg2gl.gapeq import find_Tc
    t0 = time.perf_counter()
    row, rep, sol = run_point(params, 0.2, SweepConfig(n=256), reference[1])
    row["seconds"] = time.perf_counter() - t0
    grid = sol.alpha.grid
    gd = find_Tc(params.with_h(0.2), grid)
    return row, rep, sol, params.with_h(0.2).with_beta_c(gd.beta_c), gd


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
