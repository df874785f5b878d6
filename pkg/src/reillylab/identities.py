"""Quadrature and pointwise verification of the weighted integral identities.

Integral checks evaluate analytic forms at the quadrature points of a mesh
(curved elements, exact boundary) with the density exp(-f); pointwise
checks compare two independent evaluations of the same quantity.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .forms import algebra
from .forms import jets as J
from .forms import surface as S
from .forms.fields import AnalyticForm, WeightField
from .forms.operators import curvature_matrix, trace_coefficients
from .geometry.quadrature import QuadratureSet

CHUNK = 32768


@dataclass
class ResidualReport:
    identity: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    q: int | None
    h: float | None
    descriptors: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @classmethod
    def build(cls, identity, lhs, rhs, q=None, h=None, descriptors=None, extra=None):
        lhs, rhs = float(lhs), float(rhs)
        a = abs(lhs - rhs)
        return cls(identity, lhs, rhs, a, a / max(1.0, abs(lhs), abs(rhs)), q, h,
                   descriptors or {}, extra or {})

    def to_dict(self) -> dict:
        return asdict(self)


def _describe(quad: QuadratureSet | None, f: WeightField, *forms) -> dict:
    out = {"weight": f.describe()}
    if quad is not None:
        out["domain"] = quad.mesh.domain.describe()
    for k, w in enumerate(forms):
        out[f"form{k}"] = w.describe()
    return out


# ------------------------------------------------------------------ integration

def integrate(field_fn, region: str, quad: QuadratureSet, f: WeightField | None = None) -> float:
    """sum of weight * exp(-f) * field over interior or boundary points."""
    if region == "interior":
        chunks = quad.interior_chunks(CHUNK)
    elif region == "boundary":
        chunks = quad.boundary_chunks(CHUNK)
    else:
        raise ValueError("region must be 'interior' or 'boundary'")
    total = 0.0
    for x, w in chunks:
        vals = np.asarray(field_fn(x), dtype=float)
        if f is not None:
            vals = vals * f.density(x)
        total += float(np.dot(w, vals))
    return total


def _interior_sums(quad, f, fn, nterms):
    out = np.zeros(nterms)
    for x, w in quad.interior_chunks(CHUNK):
        we = w * f.density(x)
        out += np.array([np.dot(we, t) for t in fn(x)])
    return out


def _boundary_sums(quad, f, fn, nterms):
    out = np.zeros(nterms)
    dom = quad.mesh.domain
    for x, w in quad.boundary_chunks(CHUNK):
        we = w * f.density(x)
        nu, E, Sm = dom.boundary_frames(x)
        _, Dnu = dom.normal_and_jacobian(x)
        out += np.array([np.dot(we, t) for t in fn(x, nu, E, Sm, Dnu)])
    return out


def _dot(a, b):
    return np.einsum("nI,nI->n", a, b)


def _quad_form(M, v):
    return np.einsum("nA,nAB,nB->n", v, M, v)


# ------------------------------------------------------------------ integral identities

def check_partial_integration(alpha: AnalyticForm, beta: AnalyticForm, quad: QuadratureSet,
                              f: WeightField) -> ResidualReport:
    """int <d alpha, beta> = int <alpha, delta_f beta> - oint <iota^* alpha, nu -| beta>."""
    if beta.p != alpha.p + 1 or alpha.n != beta.n:
        raise algebra.DegreeError("beta must have degree p + 1")
    p = alpha.p

    def interior(x):
        a, b, fj = alpha.jet(x, 1), beta.jet(x, 1), f.jet(x, 1)
        return (_dot(J.exterior_d(a).value, b.value),
                _dot(a.value, J.weighted_codifferential(b, fj).value))

    def boundary(x, nu, E, Sm, Dnu):
        ta, _ = trace_coefficients(alpha(x), nu, E, p)
        _, nb = trace_coefficients(beta(x), nu, E, p + 1)
        return (_dot(ta, nb),)

    i1, i2 = _interior_sums(quad, f, interior, 2)
    (b1,) = _boundary_sums(quad, f, boundary, 1)
    return ResidualReport.build("partial_integration", i1, i2 - b1, quad.q, quad.mesh.h,
                                _describe(quad, f, alpha, beta),
                                {"interior_lhs": i1, "interior_rhs": i2, "boundary": b1})


def _boundary_codiff(w: AnalyticForm, x, nu, E, Dnu, f: WeightField | None):
    """delta_f^dM (iota^* w) in frame coefficients (zero for top-degree w)."""
    n, p = w.n, w.p
    if p == 0:
        return np.zeros((len(x), 0))
    if p == n:
        return np.zeros((len(x), algebra.dim(n - 1, p - 1)))
    g = None if f is None else f.grad(x)
    return S.surface_codifferential_values(w.jet(x, 1), nu, Dnu, E, g)


def _green_terms(omega, f):
    def interior(x):
        wj, fj = omega.jet(x, 2), f.jet(x, 2)
        dw = J.exterior_d(wj).value if omega.p < omega.n else np.zeros((len(x), 0))
        dfw = J.weighted_codifferential(wj, fj).value if omega.p > 0 else np.zeros((len(x), 0))
        lap = J.weighted_laplacian(wj, fj).value
        return (_dot(dw, dw) + _dot(dfw, dfw), _dot(lap, wj.value))
    return interior


def check_green(omega: AnalyticForm, quad: QuadratureSet, f: WeightField) -> ResidualReport:
    """int |dw|^2 + |delta_f w|^2 = int <Delta_f w, w> + oint <iota^* delta_f w, nu -| w>
    - oint <nu -| dw, iota^* w>.

    The report also carries the residual obtained when the first boundary
    term is regrouped through the boundary codifferential delta_f^dM.
    """
    n, p = omega.n, omega.p

    def boundary(x, nu, E, Sm, Dnu):
        wj, fj = omega.jet(x, 1), f.jet(x, 1)
        tw, nw = trace_coefficients(wj.value, nu, E, p)
        t1 = np.zeros(len(x))
        regroup = np.zeros(len(x))
        if p > 0:
            dfw = J.weighted_codifferential(wj, fj).value
            tdf, _ = trace_coefficients(dfw, nu, E, p - 1)
            t1 = _dot(tdf, nw)
            # iota^* delta_f w = delta_f^dM iota^* w - nu -| D_nu w - S^[p-1] nu -| w + (n-1) H_f nu -| w
            bcd = _boundary_codiff(omega, x, nu, E, Dnu, f)
            Dn = np.einsum("nk,nkI->nI", nu, wj.data[1])
            _, nDn = trace_coefficients(Dn, nu, E, p)
            Sp = algebra.derivation_matrix(Sm, p - 1)
            Hf = np.trace(Sm, axis1=1, axis2=2) + np.einsum("ni,ni->n", f.grad(x), nu)
            regroup = _dot(bcd, nw) - _dot(nDn, nw) - _quad_form(Sp, nw) + Hf * _dot(nw, nw)
        t2 = np.zeros(len(x))
        if p < n:
            _, ndw = trace_coefficients(J.exterior_d(wj).value, nu, E, p + 1)
            t2 = _dot(ndw, tw)
        return (t1, t2, regroup)

    lhs, lap = _interior_sums(quad, f, _green_terms(omega, f), 2)
    b1, b2, b1_alt = _boundary_sums(quad, f, boundary, 3)
    rhs = lap + b1 - b2
    alt = ResidualReport.build("green_regrouped", lhs, lap + b1_alt - b2)
    return ResidualReport.build("green", lhs, rhs, quad.q, quad.mesh.h, _describe(quad, f, omega),
                                {"interior_laplacian": lap, "boundary_codifferential_term": b1,
                                 "boundary_normal_d_term": b2,
                                 "regrouped_boundary_term": b1_alt,
                                 "rel_residual_regrouped": alt.rel_residual})


def boundary_form_bf(wval, nu, E, Sm, fgrad, p):
    """B_f(w, w) = <S^[p] iota^* w, iota^* w> - <S^[p-1] nu -| w, nu -| w> + (n-1) H_f |nu -| w|^2."""
    tw, nw = trace_coefficients(wval, nu, E, p)
    n = nu.shape[1]
    out = np.zeros(len(nu))
    if p <= n - 1:
        out += _quad_form(algebra.derivation_matrix(Sm, p), tw)
    if p >= 1:
        out -= _quad_form(algebra.derivation_matrix(Sm, p - 1), nw)
        Hf = np.trace(Sm, axis1=1, axis2=2) + np.einsum("ni,ni->n", fgrad, nu)
        out += Hf * _dot(nw, nw)
    return out


def boundary_form_bf_dual(wval, nu, E, Sm, fgrad, p):
    """<S^[p] iota^* w, iota^* w> + <S^[n-p] iota^* *w, iota^* *w> + f_nu |nu -| w|^2."""
    n = nu.shape[1]
    tw, nw = trace_coefficients(wval, nu, E, p)
    out = np.zeros(len(nu))
    if p <= n - 1:
        out += _quad_form(algebra.derivation_matrix(Sm, p), tw)
    if 1 <= p:
        star = algebra.hodge_star(wval, n, p)
        ts, _ = trace_coefficients(star, nu, E, n - p)
        out += _quad_form(algebra.derivation_matrix(Sm, n - p), ts)
        out += np.einsum("ni,ni->n", fgrad, nu) * _dot(nw, nw)
    return out


def check_reilly(omega: AnalyticForm, quad: QuadratureSet, f: WeightField) -> ResidualReport:
    """int |dw|^2 + |delta_f w|^2 = int |Dw|^2 + <ric_f w, w>
    + 2 oint <delta_f^dM iota^* w, nu -| w> + oint B_f(w, w)."""
    n, p = omega.n, omega.p

    def interior(x):
        wj, fj = omega.jet(x, 2), f.jet(x, 2)
        dw = J.exterior_d(wj).value if p < n else np.zeros((len(x), 0))
        dfw = J.weighted_codifferential(wj, fj).value if p > 0 else np.zeros((len(x), 0))
        grad = wj.data[1]
        ric = curvature_matrix("ric", f, x, p)
        return (_dot(dw, dw) + _dot(dfw, dfw),
                np.einsum("nkI,nkI->n", grad, grad),
                _quad_form(ric, wj.value))

    def boundary(x, nu, E, Sm, Dnu):
        wv = omega(x)
        _, nw = trace_coefficients(wv, nu, E, p)
        cross = np.zeros(len(x))
        if p >= 1:
            cross = _dot(_boundary_codiff(omega, x, nu, E, Dnu, f), nw)
        return (cross, boundary_form_bf(wv, nu, E, Sm, f.grad(x), p))

    lhs, grad2, ricterm = _interior_sums(quad, f, interior, 3)
    cross, bf = _boundary_sums(quad, f, boundary, 2)
    rhs = grad2 + ricterm + 2 * cross + bf
    dropped = ResidualReport.build("reilly_interior_only", lhs, grad2 + ricterm)
    return ResidualReport.build("reilly", lhs, rhs, quad.q, quad.mesh.h, _describe(quad, f, omega),
                                {"grad_term": grad2, "ricci_term": ricterm, "cross_term": cross,
                                 "bf_term": bf, "rel_residual_without_boundary": dropped.rel_residual})


# ------------------------------------------------------------------ pointwise identities

def _pointwise_report(name, a, b, f, forms, extra=None):
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    diff = np.linalg.norm(a - b, axis=-1)
    scale = np.maximum(1.0, np.maximum(np.linalg.norm(a, axis=-1), np.linalg.norm(b, axis=-1)))
    k = int(np.argmax(diff / scale))
    rep = ResidualReport(name, float(np.linalg.norm(a[k])), float(np.linalg.norm(b[k])),
                         float(diff[k]), float(diff[k] / scale[k]), None, None,
                         _describe(None, f, *forms), extra or {})
    rep.extra["samples"] = int(len(a))
    return rep


def check_bochner(omega: AnalyticForm, x, f: WeightField) -> ResidualReport:
    """Delta_f w = nabla^* nabla w + nabla_{grad f} w + ric_f^(p) w, pointwise."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    wj, fj = omega.jet(x, 2), f.jet(x, 2)
    lhs = J.weighted_laplacian(wj, fj).value
    rough = J.rough_laplacian(wj).value
    drift = J.directional(J.gradient_field(fj), wj).value
    ric = np.einsum("nJI,nI->nJ", curvature_matrix("ric", f, x, omega.p), wj.value)
    return _pointwise_report("bochner", lhs, rough + drift + ric, f, [omega])


def boundary_structure_terms(omega: AnalyticForm, domain, x, f: WeightField):
    """Both sides of the three boundary structure equations at boundary points."""
    n, p = omega.n, omega.p
    if n not in (2, 3) or not 1 <= p <= n - 1:
        raise S.UnsupportedCaseError(f"boundary structure equations need 1 <= p <= n-1, n in (2, 3); got n={n}, p={p}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    domain.check_on_boundary(x)
    nu, E, Sm = domain.boundary_frames(x)
    _, Dnu = domain.normal_and_jacobian(x)
    wj, fj = omega.jet(x, 2), f.jet(x, 2)
    tw, nw = trace_coefficients(wj.value, nu, E, p)
    Dn = np.einsum("nk,nkI->nI", nu, wj.data[1])
    tDn, nDn = trace_coefficients(Dn, nu, E, p)
    H = np.trace(Sm, axis1=1, axis2=2) / (n - 1)
    fnu = np.einsum("ni,ni->n", f.grad(x), nu)
    Hf = H + fnu / (n - 1)
    Sp1 = np.einsum("nAB,nB->nA", algebra.derivation_matrix(Sm, p - 1), nw)
    Sp = np.einsum("nAB,nB->nA", algebra.derivation_matrix(Sm, p), tw)

    delta_b = S.surface_codifferential_values(wj, nu, Dnu, E, None)
    td, _ = trace_coefficients(J.codifferential(wj).value, nu, E, p - 1)
    rhs1 = td + nDn + Sp1 - ((n - 1) * H)[:, None] * nw

    # d^dM (nu -| w) via the extended normal field
    inner = J.interior_field([nu, Dnu], wj.truncate(1))
    d_b = S.surface_d_values(inner, E)
    _, ndw = trace_coefficients(J.exterior_d(wj).value, nu, E, p + 1)
    rhs2 = -ndw + tDn - Sp

    deltaf_b = S.surface_codifferential_values(wj, nu, Dnu, E, f.grad(x))
    tdf, _ = trace_coefficients(J.weighted_codifferential(wj, fj).value, nu, E, p - 1)
    rhs3 = tdf + nDn + Sp1 - ((n - 1) * Hf)[:, None] * nw
    return {"codifferential": (delta_b, rhs1), "exterior": (d_b, rhs2), "weighted_codifferential": (deltaf_b, rhs3)}


def check_boundary_formulas(omega: AnalyticForm, domain, x, f: WeightField) -> list[ResidualReport]:
    terms = boundary_structure_terms(omega, domain, x, f)
    return [_pointwise_report(f"boundary_{k}", a, b, f, [omega]) for k, (a, b) in terms.items()]


def check_bf_duality(omega: AnalyticForm, domain, x, f: WeightField) -> ResidualReport:
    n, p = omega.n, omega.p
    if n not in (2, 3) or not 0 <= p <= n:
        raise S.UnsupportedCaseError(f"unsupported n={n}, p={p}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    domain.check_on_boundary(x)
    nu, E, Sm = domain.boundary_frames(x)
    wv, g = omega(x), f.grad(x)
    a = boundary_form_bf(wv, nu, E, Sm, g, p)
    b = boundary_form_bf_dual(wv, nu, E, Sm, g, p)
    return _pointwise_report("bf_duality", a[:, None], b[:, None], f, [omega])
