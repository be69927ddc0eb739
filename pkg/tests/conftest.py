import warnings
from pathlib import Path

import pytest

from nibm.equilibrium import GridOverlapWarning, solve_equilibrium
from nibm.graph import ProblemConfig, TransitionMatrix, build_tree

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# lines reported by test_acceptance.py, printed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


SEMICIRCLE = (ProblemConfig((0.0,), (0.0,), 0.5, 1.0), TransitionMatrix([["1"]]))
TWO_BY_TWO = (ProblemConfig((1.0, -1.0), (1.0, -1.0), 0.5, 0.05),
              TransitionMatrix([["1/3", "0"], ["1/3", "1/3"]]))


def _solve(cfg, m, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridOverlapWarning)
        return solve_equilibrium(cfg, build_tree(m), **kw)


@pytest.fixture(scope="session")
def configs_dir():
    return CONFIGS


@pytest.fixture(scope="session")
def semicircle():
    return SEMICIRCLE


@pytest.fixture(scope="session")
def two_by_two():
    return TWO_BY_TWO


@pytest.fixture(scope="session")
def semicircle_sol():
    return _solve(*SEMICIRCLE, grid=2000)


@pytest.fixture(scope="session")
def semicircle_grid_sol():
    return _solve(*SEMICIRCLE, grid=2000, refine=False)


@pytest.fixture(scope="session")
def pq2_sol():
    return _solve(*TWO_BY_TWO, grid=2000)


@pytest.fixture(scope="session")
def pq2_grid_sol():
    return _solve(*TWO_BY_TWO, grid=600, refine=False)


@pytest.fixture(scope="session")
def pq2_ctx(pq2_sol):
    from nibm.spectral import SpectralContext
    return SpectralContext(pq2_sol)
