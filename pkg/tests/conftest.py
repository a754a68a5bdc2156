import numpy as np
import pytest

from gfreqpca import Graph, build_laplacian, builtin_karate, builtin_us_sensor_coords, knn_gaussian_graph


def cycle_graph(n):
    return Graph(n, tuple((i, (i + 1) % n, 1.0) for i in range(n)))


def random_graph(rng, n, density=0.4):
    edges = [(i, j, float(rng.uniform(0.1, 2.0))) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return Graph(n, tuple(edges))


def random_psd_field(rng, n, p, rank=None, complex_=True):
    rank = p if rank is None else rank
    A = rng.standard_normal((n, p, rank))
    if complex_:
        A = A + 1j * rng.standard_normal((n, p, rank))
    return A @ np.conj(np.swapaxes(A, 1, 2))


@pytest.fixture(scope="session")
def karate_so():
    return build_laplacian(builtin_karate())


@pytest.fixture(scope="session")
def us_so():
    return build_laplacian(knn_gaussian_graph(builtin_us_sensor_coords(), 7, "haversine"))


@pytest.fixture(scope="session")
def path2_so():
    return build_laplacian(Graph(2, ((0, 1, 1.0),)))


@pytest.fixture(scope="session")
def cycle8_so():
    return build_laplacian(cycle_graph(8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
