import os

# several threads even on a one-core box, so thread-count tests have something to vary
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

import numpy as np
import pytest

from nonlocal_fv.model import GridSpec, ModelParams, PopulationState, build_kernel_table


@pytest.fixture(scope="session")
def params():
    return ModelParams()


def grid_for(nx, L=10.0, courant=0.2, gamma=0.1, T=10.0):
    dx = L / nx
    return GridSpec(dx=dx, dt=courant * dx / gamma, T=T, L=L)


@pytest.fixture(scope="session")
def grid256():
    return grid_for(256)


@pytest.fixture(scope="session")
def kernels256(params, grid256):
    return build_kernel_table(params, grid256)


def random_state(rng, nx, lo=0.0, hi=4.0):
    return PopulationState(rng.uniform(lo, hi, nx), rng.uniform(lo, hi, nx))


# acceptance criteria report: one line per criterion at the end of the session
ACCEPTANCE = {}


def record_criterion(number, name, passed, detail=""):
    ACCEPTANCE[number] = (name, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {name}  {detail}")
