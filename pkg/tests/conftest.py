import numpy as np
import pytest

from sldg.dgcore import MeshBasis, project_function
from sldg.mesh import Mesh, unstructured_disk_mesh


@pytest.fixture(scope="session")
def unit_triangle():
    return np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])


@pytest.fixture(scope="session")
def coarse_disk():
    return unstructured_disk_mesh(4)


@pytest.fixture(scope="session")
def coarse_basis_p2(coarse_disk):
    return MeshBasis(coarse_disk, 2)


@pytest.fixture(scope="session")
def coarse_basis_p1(coarse_disk):
    return MeshBasis(coarse_disk, 1)


@pytest.fixture(scope="session")
def gaussian_p2(coarse_basis_p2):
    return project_function(coarse_basis_p2,
                            lambda x, y: np.exp(-3.0 * (x * x + y * y)))


@pytest.fixture(scope="session")
def two_triangle_mesh():
    verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    tris = [(0, 1, 2), (0, 2, 3)]
    return Mesh(np.asarray(verts), np.asarray(tris))
