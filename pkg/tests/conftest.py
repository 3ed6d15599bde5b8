import numpy as np
import pytest

from steklab import geometry as geo
from steklab import meshing as msh


@pytest.fixture(scope="session")
def sphere():
    return geo.Sphere(1.0)


@pytest.fixture(scope="session")
def hyperbolic():
    return geo.Hyperbolic(1.0)


@pytest.fixture(scope="session")
def product():
    return geo.ProductS2R()


@pytest.fixture(scope="session")
def euclid2():
    return geo.Euclidean(2)


@pytest.fixture(scope="session")
def disk_mesh_cache():
    cache = {}

    def get(level):
        if level not in cache:
            cache[level] = msh.unit_ball_mesh(2, level)
        return cache[level]

    return get


@pytest.fixture(scope="session")
def ball_mesh_cache():
    cache = {}

    def get(level):
        if level not in cache:
            cache[level] = msh.unit_ball_mesh(3, level)
        return cache[level]

    return get


def fit_slope(xs, ys):
    """Least-squares slope in log-log coordinates."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    A = np.stack([np.ones_like(lx), lx], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(coef[1])
