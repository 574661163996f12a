import numpy as np
import pytest

from vemsupg.geometry import ElementGeometry
from vemsupg.mesh import generate_cartesian, generate_concave_pentagons, generate_voronoi

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def make_geometry(verts, k=1, ell=1, cell=None):
    return ElementGeometry(verts, 2 * (k + ell) + 2, k + ell + 1, cell=cell)


@pytest.fixture(scope="session")
def square_geom():
    return make_geometry(UNIT_SQUARE, k=4, ell=6)


@pytest.fixture(scope="session")
def mesh_t1():
    return generate_cartesian(4, 4)


@pytest.fixture(scope="session")
def mesh_t2():
    return generate_concave_pentagons(4)


@pytest.fixture(scope="session")
def mesh_t3():
    return generate_voronoi(25, lloyd_iters=50, seed=42)


@pytest.fixture(scope="session")
def acceptance_meshes(mesh_t1, mesh_t2, mesh_t3):
    return {"t1": mesh_t1, "t2": mesh_t2, "t3": mesh_t3}
