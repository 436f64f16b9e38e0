import numpy as np
import pytest

from parakin.config import RunConfig
from parakin.experiment import init_state
from parakin.mesh import MeshSpec, build_mesh


@pytest.fixture(scope="session")
def mesh():
    """Reference grid of the experiments: 32 cells, 32x16x16 velocities."""
    return build_mesh(MeshSpec(nx=32, nvx=32, nvy=16, nvz=16))


@pytest.fixture(scope="session")
def small_mesh():
    """Cheap grid for stepping tests; physics identical, moments cruder."""
    return build_mesh(MeshSpec(nx=16, nvx=8, nvy=4, nvz=4))


@pytest.fixture(scope="session")
def init(mesh):
    return init_state(RunConfig(), mesh)


@pytest.fixture(scope="session")
def small_init(small_mesh):
    return init_state(RunConfig(nx=16, nvx=8, nvy=4, nvz=4), small_mesh)


def rel_inf(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)
