import numpy as np
import pytest

from reillylab.geometry.domain import build_domain
from reillylab.geometry.mesh import build_mesh


@pytest.fixture(scope="session")
def disk():
    return build_domain("ball", 2)


@pytest.fixture(scope="session")
def ball3():
    return build_domain("ball", 3)


@pytest.fixture(scope="session")
def annulus2():
    return build_domain("annulus", 2)


@pytest.fixture(scope="session")
def disk_mesh(disk):
    return build_mesh(disk, 4)


@pytest.fixture(scope="session")
def annulus_mesh(annulus2):
    return build_mesh(annulus2, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def interior_points(domain, rng, count=30):
    """Uniform samples in the domain by rejection from the bounding box."""
    R = domain.scale
    pts = []
    while sum(len(p) for p in pts) < count:
        x = rng.uniform(-R, R, size=(4 * count, domain.n))
        pts.append(x[domain.contains(x, tol=-1e-3)])
    return np.vstack(pts)[:count]


def boundary_points(domain, rng, count=30):
    u = rng.standard_normal((count, domain.n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    if domain.kind == "annulus":
        r0, r1 = domain.radii
        u[: count // 2] *= r0
        u[count // 2:] *= r1
        return u
    return domain.project(u * domain.scale)
