"""Verdict logic, certified hypotheses and the inequality checks."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from reillylab import inequalities as ineq
from reillylab.forms.fields import constant_weight, linear_weight, polynomial, quadratic_weight
from reillylab.forms.operators import LowerBound
from reillylab.geometry.domain import build_domain
from reillylab.geometry.mesh import build_mesh

from conftest import boundary_points

X1 = polynomial(3, 0, {((), (1, 0, 0)): 1.0})               # x_1
X1_DX2 = polynomial(3, 1, {((1,), (1, 0, 0)): 1.0})         # x_1 dx_2


# ------------------------------------------------------------------ verdict rules

@pytest.mark.parametrize("hyp,margin,error,strict,tol,verdict", [
    (False, 1.0, 0.0, False, 0.0, ineq.NOT_MET),
    (True, 1.0, 0.1, True, 0.0, ineq.PASS),
    (True, 0.25, 0.1, True, 0.0, ineq.FAIL),        # margin inside 3x the error
    (True, 0.0, 0.0, False, 0.0, ineq.PASS),        # equality is allowed when not strict
    (True, -1e-9, 0.0, False, 1e-8, ineq.PASS),
    (True, -1e-3, 1e-4, False, 0.0, ineq.FAIL),
    (True, float("nan"), 0.0, False, 0.0, ineq.FAIL),
])
def test_decide(hyp, margin, error, strict, tol, verdict):
    assert ineq.decide(hyp, margin, error, strict, tol) == verdict


@pytest.mark.parametrize("m0,m1,err,ok", [
    (1.0, 1.2, 0.0, True),
    (1.0, 1.6, 0.0, False),
    (1e-12, -2e-12, 1e-11, True),     # both inside the error band
    (0.1, -0.1, 1e-6, False),         # sign change
])
def test_stability_gate(m0, m1, err, ok):
    assert ineq.stable(m0, m1, err) is ok


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_equality_gap_bounded(a, b):
    g = ineq.equality_gap(a, b)
    assert 0.0 <= g <= 2.0
    assert g == ineq.equality_gap(b, a)


def test_certify_strict_and_slack():
    lb = LowerBound(c_min=1.0 - 1e-12, sampled_min=1.0, margin=1e-12, samples=10)
    assert ineq.certify(lb, 1.0)["ok"]
    assert not ineq.certify(lb, 1.0, strict=True)["ok"]
    assert not ineq.certify(lb, 1.1)["ok"]


# ------------------------------------------------------------------ hypotheses

@given(st.floats(0.5, 2.0), st.floats(0.0, 1.5), st.floats(0.05, 1.0))
@settings(max_examples=10, deadline=None)
def test_positivity_bound_monotone_in_kappa(R, kappa, dk):
    # on the sphere of radius R: sigma_2 + f_nu = 2/R - kappa R exactly
    dom = build_domain("ball", 3, {"R": R})
    a = ineq.positivity_bound(dom, quadratic_weight(3, kappa), 2)
    b = ineq.positivity_bound(dom, quadratic_weight(3, kappa + dk), 2)
    assert b.c_min < a.c_min
    assert a.c_min <= 2 / R - kappa * R <= a.sampled_min + 1e-12
    assert a.c_min == pytest.approx(2 / R - kappa * R, abs=1e-9)


def test_sigma_bound_annulus(annulus2):
    # the inner circle is concave: sigma_1 = -1/R0
    lb = ineq.sigma_bound(annulus2, 1)
    assert lb.c_min == pytest.approx(-1 / annulus2.radii[0], rel=1e-9)


def test_sigma_values_sorted():
    Sm = np.diag([3.0, 1.0, 2.0])[None]
    assert_allclose(ineq.sigma_values(Sm, 2), [3.0])


@pytest.mark.parametrize("n,p", [(2, 0), (3, 0)])
def test_betti_numbers(n, p):
    assert ineq.betti_number(build_domain("annulus", n), p) == 1


def test_betti_shell():
    assert ineq.betti_number(build_domain("annulus", 3), 2) == 1
    assert ineq.betti_number(build_domain("annulus", 3), 1) == 0
    assert ineq.betti_number(build_domain("annulus", 2), 1) == 1
    assert ineq.betti_number(build_domain("ball", 3), 1) == 0


# ------------------------------------------------------------------ pointwise sums

@given(st.sampled_from([("ball", 1), ("ball", 2), ("ellipsoid", 1), ("ellipsoid", 2)]),
       st.sampled_from(["const", "linear", "gaussian"]), st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_immersion_sums(case, wname, seed):
    kind, p = case
    dom = build_domain(kind, 3, {"axes": [1.0, 0.9, 1.2]} if kind == "ellipsoid" else None)
    f = {"const": constant_weight(3), "linear": linear_weight(3, [0.3, -0.2, 0.1]),
         "gaussian": quadratic_weight(3, 1.0)}[wname]
    out = ineq.immersion_sums(dom, f, p, boundary_points(dom, np.random.default_rng(seed), 12))
    assert out["weingarten_residual"] <= 1e-10
    assert out["delta_f_residual"] <= 1e-10
    assert out["cross_residual"] <= 1e-10


@pytest.mark.parametrize("c,p,expected", [(1.0, 1, 0.5), (0.5, 1, 0.25), (1.0, 2, 1.5)])
def test_sphere_constant(c, p, expected):
    assert ineq.sphere_constant(c, 3, p) == pytest.approx(expected)


# ------------------------------------------------------------------ integral checks

def test_poincare_equality_case(ball3):
    out = ineq.poincare_check(ball3, constant_weight(3), 1, X1, m=4, refine=False)
    assert out.verdict == ineq.PASS
    assert out.lhs == pytest.approx(8 * np.pi / 3, rel=1e-6)
    assert out.equality_gap < 1e-8


def test_poincare_steep_weight_not_certified(ball3):
    out = ineq.poincare_check(ball3, quadratic_weight(3, 2.0), 1, X1, m=4,
                              refine=False)
    assert out.verdict == ineq.NOT_MET
    assert not out.hypotheses["sigma_plus_fnu"]["ok"]


def test_poincare_rejects_middle_degree():
    with pytest.raises(ineq.UnsupportedCheckError):
        ineq.poincare_check(build_domain("ball", 2), None, 1, polynomial(2, 0, {((), (1, 0)): 1.0}), m=4)


@pytest.mark.parametrize("p", [1, 2])
def test_equality_relation_extension(ball3, p):
    alpha = X1 if p == 1 else X1_DX2
    rel = ineq.equality_relation(alpha, ball3, constant_weight(3), p, m=2)
    assert rel["relation_residual"] < 1e-8
    assert rel["kernel_dim"] == 0


def test_poincare_general_zero_alpha(ball3):
    out = ineq.poincare_general_check(ball3, quadratic_weight(3, 1.0), 1, 0.5, None, m=2,
                                      refine=False)
    assert out.verdict == ineq.PASS
    assert out.lhs == out.rhs == 0.0


def test_mean_curvature_ellipsoid():
    dom = build_domain("ellipsoid", 3, {"axes": [1.0, 1.0, 1.2]})
    out = ineq.mean_curvature_euclidean_check(dom, linear_weight(3, [0.0, 0.0, 0.1]), 1, m=4,
                                              refine=False)
    assert out.verdict == ineq.PASS
    assert out.margin > 0


def test_sphere_immersion_curvature_too_large(ball3):
    out = ineq.mean_curvature_sphere_check(ball3, quadratic_weight(3, 1.0), 1, 2.0, m=2, refine=False)
    assert out.verdict == ineq.NOT_MET


# ------------------------------------------------------------------ spectral checks

def test_boundary_eigen_interval_excluded(ball3):
    out = ineq.boundary_eigen_bound_check(ball3, quadratic_weight(3, 1.0), 1, c=0.5, m=4, refine=False)
    lo, hi = out.diagnostics["interval"]
    assert out.lhs == pytest.approx(1.0, abs=1e-8)      # sigma_1 * (sigma_2 + f_nu) = 1 * 1
    assert lo == pytest.approx((2 - np.sqrt(3)) / 2, rel=1e-6)   # k = c p (n - p) = 1
    assert out.diagnostics["excluded"]
    assert out.verdict == ineq.PASS


@pytest.mark.parametrize("kind", ["dirichlet", "neumann", "buckling", "clamped"])
def test_eigenvalue_lower_bound_disk(disk, kind):
    out = ineq.eigenvalue_lower_bound_check(kind, disk, quadratic_weight(2, 1.0), 1, 4.0, m=4,
                                            refine=False)
    bound = 2 / 3 if kind != "clamped" else 4 / 9
    assert out.lhs == pytest.approx(bound, rel=1e-6)
    assert out.strict or kind == "neumann"
    assert out.verdict == ineq.PASS


def test_eigenvalue_lower_bound_forbidden_N(disk):
    with pytest.raises(Exception):
        ineq.eigenvalue_lower_bound_check("dirichlet", disk, quadratic_weight(2, 1.0), 1, 1.5, m=2)


@pytest.mark.parametrize("p", [0, 1, 2])
def test_ordering_items(disk_mesh, p):
    outs = ineq.ordering_check(disk_mesh, quadratic_weight(2, 1.0), p, refine=False)
    items = {o.theorem for o in outs}
    assert {"ordering:1", "ordering:2", "ordering:3", "ordering:6"} <= items
    assert ("ordering:4" in items) == (p == 1)
    assert all(o.verdict == ineq.PASS for o in outs)


def test_kernel_checks_annulus(annulus2):
    weights = [constant_weight(2), linear_weight(2, [0.3, -0.2]), quadratic_weight(2, 1.0)]
    outs = ineq.kernel_checks(annulus2, weights, 1, m=2)
    betti = [o for o in outs if o.theorem == "kernel:neumann_betti"]
    assert [o.rhs for o in betti] == [1.0, 1.0, 1.0]
    assert all(o.verdict == ineq.PASS for o in outs)


def test_outcome_serializes(ball3):
    out = ineq.poincare_general_check(ball3, quadratic_weight(3, 1.0), 1, 0.5, None, m=2, refine=False)
    d = out.to_dict()
    assert d["verdict"] == "pass"
    assert isinstance(d["hypotheses"], dict)
