import numpy as np
import pytest

from qdpd import graph, objective


@pytest.fixture(scope="session")
def ring12():
    return graph.build_ring(12)


@pytest.fixture(scope="session")
def benchmark_problem():
    return objective.table1_problem()


@pytest.fixture(scope="session")
def benchmark_x0():
    return np.array([-9.0, 4.0, -9.0, -9.0, 0.0, -8.0, 6.0, 6.0, 4.0, -7.0, 3.0, 0.0])


@pytest.fixture(scope="session")
def benchmark_solution(benchmark_problem):
    return objective.solve_centralized(benchmark_problem)
