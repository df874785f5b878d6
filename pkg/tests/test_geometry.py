"""Domains, curved meshes and quadrature."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from reillylab.geometry.domain import InvalidParameterError, PointOffBoundaryError, build_domain
from reillylab.geometry.mesh import build_mesh, generate_mesh
from reillylab.geometry.quadrature import monomial_integral, quadrature_rule, simplex_rule

from conftest import boundary_points


@pytest.mark.parametrize("kind,n,params,vol", [
    ("ball", 2, None, np.pi),
    ("ball", 3, {"R": 2.0}, 32 * np.pi / 3),
    ("annulus", 2, {"R0": 0.5, "R1": 1.0}, 0.75 * np.pi),
    ("ellipsoid", 3, {"axes": [1.0, 1.0, 1.2]}, 4.8 * np.pi / 3),
])
def test_volume(kind, n, params, vol):
    assert build_domain(kind, n, params).volume() == pytest.approx(vol, rel=1e-14)


@pytest.mark.parametrize("kind,params", [("ball", {"R": -1.0}), ("annulus", {"R0": 1.0, "R1": 0.5})])
def test_invalid_parameters(kind, params):
    with pytest.raises(InvalidParameterError):
        build_domain(kind, 2, params)


def test_off_boundary_point_rejected(disk):
    with pytest.raises(PointOffBoundaryError):
        disk.boundary_data(np.array([[0.5, 0.0]]))


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_sphere_shape_operator(R, rng):
    dom = build_domain("ball", 3, {"R": R})
    x = boundary_points(dom, rng, 10)
    nu, E, S = dom.boundary_frames(x)
    assert_allclose(nu, -x / R, atol=1e-14)                  # inward
    assert_allclose(S, np.broadcast_to(np.eye(2) / R, S.shape), atol=1e-12)


def test_annulus_inner_circle_is_concave(annulus2, rng):
    x = boundary_points(annulus2, rng, 20)
    k = annulus2.curvatures(x)[:, 0]
    r = np.linalg.norm(x, axis=1)
    assert_allclose(k, np.where(np.isclose(r, annulus2.radii[1]), 1 / r, -1 / r), rtol=1e-12)


def test_ellipsoid_curvature_at_pole():
    # principal curvatures c / a^2 at the tip of the c semi-axis
    dom = build_domain("ellipsoid", 3, {"axes": [1.0, 1.0, 1.2]})
    k = dom.curvatures(np.array([[0.0, 0.0, 1.2]]))
    assert_allclose(k.ravel(), [1.2, 1.2], rtol=1e-10)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_tangent_frames_orthonormal(seed):
    dom = build_domain("ellipsoid", 3, {"axes": [1.0, 0.8, 1.3]})
    x = boundary_points(dom, np.random.default_rng(seed), 8)
    nu, E, S = dom.boundary_frames(x)
    full = np.concatenate([nu[:, :, None], E], axis=2)
    assert_allclose(np.einsum("nij,nik->njk", full, full), np.broadcast_to(np.eye(3), (8, 3, 3)),
                    atol=1e-12)
    assert_allclose(np.linalg.det(full), 1.0, atol=1e-12)
    assert_allclose(S, np.swapaxes(S, 1, 2), atol=1e-10)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("q", [2, 4, 6, 8])
def test_simplex_rule_exact(n, q):
    xi, w = simplex_rule(n, q)
    for e in [(q, 0, 0), (1, q - 1, 0), (q // 2, q // 2 - 1, 1)]:
        e = e[:n]
        assert np.dot(w, np.prod(xi ** np.array(e), axis=1)) == pytest.approx(monomial_integral(e),
                                                                              rel=1e-12)


@pytest.mark.parametrize("kind,n", [("ball", 2), ("ball", 3), ("annulus", 2), ("annulus", 3)])
def test_curved_mesh_measures(kind, n):
    # the mesh map is exact on the boundary; only quadrature error remains
    dom = build_domain(kind, n)
    errs = []
    for m in (2, 4):
        quad = quadrature_rule(build_mesh(dom, m), 8)
        errs.append(abs(quad.interior_w.sum() / dom.volume() - 1))
        assert quad.boundary_w.sum() == pytest.approx(dom.boundary_measure(), rel=1e-6)
    assert errs[0] < 1e-5
    assert errs[1] <= max(errs[0] / 4, 1e-13)


def test_boundary_vertices_on_boundary(annulus_mesh, annulus2):
    x = annulus_mesh.vertices[annulus_mesh.boundary_vertices]
    assert_allclose(annulus2.signed_distance(x), 0.0, atol=1e-13)


def test_refinement_halves_h(disk_mesh):
    fine = disk_mesh.refine()
    assert fine.level == 2 * disk_mesh.level
    assert fine.h == pytest.approx(disk_mesh.h / 2, rel=0.15)


def test_generate_mesh_reaches_target(disk):
    mesh = generate_mesh(disk, 0.1)
    assert mesh.h <= 0.15
