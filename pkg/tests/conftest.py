import pytest

from oubstop import OUBParams, SolverConfig, picard_solve


@pytest.fixture(scope="session")
def std_params():
    return OUBParams(alpha=1.0, gamma=1.0, z=0.0)


@pytest.fixture(scope="session")
def std_solution(std_params):
    return picard_solve(std_params, SolverConfig(n=500))
