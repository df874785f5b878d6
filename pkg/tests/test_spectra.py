"""Eigensolvers and the discrete boundary value problems."""
import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from reillylab.forms.fields import constant_weight, coordinate_form, quadratic_weight
from reillylab.geometry.domain import build_domain
from reillylab.geometry.mesh import build_mesh
from reillylab.spectra.boundary import boundary_function_spectrum, multiplicity
from reillylab.spectra.eigen import (GapDetectionError, count_zero_modes, dense_eig, eig_small,
                                     lanczos, semidefinite_shift)
from reillylab.spectra.extension import harmonic_extension, relative_kernel
from reillylab.spectra.problems import (betti_zero_count, discretize, first_positive,
                                        solve_fourth_order, solve_second_order)

_discs = {}


def disc_for(kind, n, m, f_name, p):
    key = (kind, n, m, f_name, p)
    if key not in _discs:
        f = quadratic_weight(n, 1.0) if f_name == "gaussian" else constant_weight(n)
        _discs[key] = discretize(build_mesh(build_domain(kind, n), m), f, p)
    return _discs[key]


def path_laplacian(N):
    A = sp.diags([-np.ones(N - 1), 2 * np.ones(N), -np.ones(N - 1)], [-1, 0, 1], format="csr")
    return A, sp.identity(N, format="csr")


def test_lanczos_path_laplacian():
    N = 400
    A, B = path_laplacian(N)
    res = lanczos(A, B, 5, seed=3)
    exact = 2 - 2 * np.cos(np.arange(1, 6) * np.pi / (N + 1))
    assert_allclose(res.eigenvalues, exact, rtol=1e-9)
    assert np.all(res.residuals < 1e-8)


@given(st.integers(0, 2**31 - 1), st.integers(20, 120))
@settings(max_examples=15, deadline=None)
def test_lanczos_matches_dense(seed, N):
    rng = np.random.default_rng(seed)
    R = sp.random(N, N, density=0.1, random_state=seed)
    A = (R @ R.T + sp.identity(N)).tocsr()
    d = rng.uniform(0.5, 2.0, N)
    B = sp.diags(d, format="csr")
    a = lanczos(A, B, 4, seed=seed).eigenvalues
    b = dense_eig(A, B, 4).eigenvalues
    assert_allclose(a, b, rtol=1e-8)


def test_lanczos_deterministic():
    A, B = path_laplacian(200)
    r1, r2 = eig_small(A, B, 3, seed=11), eig_small(A, B, 3, seed=11)
    assert np.array_equal(r1.eigenvalues, r2.eigenvalues)
    assert np.array_equal(r1.vectors, r2.vectors)


@pytest.mark.parametrize("values,count", [
    ([1e-12, 2e-12, 3.0, 4.0], 2),
    ([0.5, 3.0, 4.0], 0),
    ([-1e-10, 1.0], 1),
    ([1e-9, 1e-9], 0),                  # scale-free: no gap means no zero block
])
def test_count_zero_modes(values, count):
    assert count_zero_modes(values) == count


@pytest.mark.parametrize("values", [[0.0], [-1.0, 1.0], [-0.5, 0.0, 0.2]])
def test_count_zero_modes_ambiguous(values):
    with pytest.raises(GapDetectionError):
        count_zero_modes(values)


def test_semidefinite_shift_negative():
    A, B = path_laplacian(50)
    assert semidefinite_shift(A, B) < 0


def test_disk_dirichlet_bessel():
    # j_{0,1}^2 = 5.78318596...
    res = solve_second_order("dirichlet", disc_for("ball", 2, 4, "const", 0), k=4)
    assert res.eigenvalues[0] == pytest.approx(5.783185962946784, rel=2e-3)
    # j_{1,1}^2 twice
    assert multiplicity(res.eigenvalues, 14.681970642123893, rel=5e-3) == 2


def test_scaling_law():
    # lambda(R D) = lambda(D) / R^2 on the scaled mesh
    a = solve_second_order("dirichlet", disc_for("ball", 2, 4, "const", 0), k=2).eigenvalues[0]
    big = discretize(build_mesh(build_domain("ball", 2, {"R": 2.0}), 4), constant_weight(2), 0)
    b = solve_second_order("dirichlet", big, k=2).eigenvalues[0]
    assert b == pytest.approx(a / 4, rel=1e-9)


def test_hodge_duality_top_degree():
    # Neumann on n-forms is Dirichlet on functions through the Hodge star
    a = solve_second_order("dirichlet", disc_for("ball", 2, 4, "const", 0), k=3).eigenvalues
    b = solve_second_order("neumann", disc_for("ball", 2, 4, "const", 2), k=3).eigenvalues
    assert_allclose(a, b, rtol=1e-8)


def test_neumann_functions_zero_mode():
    value, zeros = first_positive(solve_second_order("neumann", disc_for("ball", 2, 4, "gaussian", 0), k=4))
    assert zeros == 1
    assert value > 1.0


@pytest.mark.parametrize("kind,betti", [("ball", 0), ("annulus", 1)])
def test_betti_number_from_zero_modes(kind, betti):
    count, _ = betti_zero_count(disc_for(kind, 2, 4, "gaussian", 1), expected=betti)
    assert count == betti


def test_fourth_order_bessel():
    disc = disc_for("ball", 2, 4, "const", 0)
    buck = solve_fourth_order("buckling", disc, k=2).eigenvalues[0]
    clamp = solve_fourth_order("clamped", disc, k=2).eigenvalues[0]
    assert buck == pytest.approx(14.681970642123893, rel=0.03)
    assert clamp == pytest.approx(104.3631056, rel=0.03)


def test_unknown_problem():
    with pytest.raises(ValueError):
        solve_second_order("robin", disc_for("ball", 2, 4, "const", 0))


def test_sphere_boundary_spectrum():
    res = boundary_function_spectrum(build_mesh(build_domain("ball", 3), 4), None, k=6)
    assert res.meta["zero_modes"] == 1
    pos = res.meta["positive"]
    assert pos[0] == pytest.approx(2.0, rel=0.02)
    assert multiplicity(pos, pos[0], rel=1e-3) == 3


def test_extension_of_exact_trace(disk_mesh):
    # alpha = x_1 on the disk: the extension has the trace of dx_1 and no kernel
    ext = harmonic_extension(coordinate_form(2, 0), disk_mesh, constant_weight(2), 1)
    assert ext.unique
    assert ext.energy == pytest.approx(ext.d_norm ** 2 + ext.delta_norm ** 2, rel=1e-10)
    assert ext.energy < 1e-8


def test_relative_kernel_ball(disk_mesh):
    count, _ = relative_kernel(disk_mesh, quadratic_weight(2, 1.0), 1)
    assert count == 0
