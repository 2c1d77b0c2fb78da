import numpy as np
import pytest

from mmfsphere.frames import build_frames
from mmfsphere.sem import compute_geometry, make_reference_element
from mmfsphere.sphere_mesh import build_sphere_mesh


def make_geometry(n, p, strategy, p_geom=None):
    mesh = build_sphere_mesh(n, p if p_geom is None else p_geom, strategy)
    return compute_geometry(mesh, make_reference_element(p))


@pytest.fixture(scope="session")
def geom_opt():
    """Optimized n=2, p=4: the cheap workhorse discretization."""
    return make_geometry(2, 4, "optimized")


@pytest.fixture(scope="session")
def geom_naive():
    return make_geometry(2, 4, "naive")


@pytest.fixture(scope="session")
def geom_opt_p6():
    """Optimized n=2, p=6 for checks that need spectral headroom."""
    return make_geometry(2, 6, "optimized")


@pytest.fixture(scope="session")
def frames_local(geom_opt):
    return build_frames(geom_opt, "local")


@pytest.fixture(scope="session")
def frames_spherical(geom_opt):
    return build_frames(geom_opt, "spherical")


@pytest.fixture(scope="session")
def frames_local_p6(geom_opt_p6):
    return build_frames(geom_opt_p6, "local")


@pytest.fixture()
def rng():
    return np.random.default_rng(20260825)
