"""Intrinsic calculus on the boundary hypersurface via ambient extensions.

A boundary form beta = iota^* w is represented by any ambient form w.
With the extended unit normal field nu (from the domain), the
tangential part w_T = w - nu ^ (nu -| w) is tangent along the whole
neighborhood, and its intrinsic covariant derivative along a tangent X is
the tangential projection of D_X w_T.  That gives

    delta^dM beta = - iota^*( sum_a e_a -| D_{e_a} w_T ),

using only the analytic normal field and its first derivatives.  Values
are returned in the tangent frame E of :meth:`Domain.boundary_frames`.
"""
from __future__ import annotations

import numpy as np

from . import algebra
from . import jets as J
from .fields import AnalyticForm, WeightField
from .operators import FormValue, _single


class UnsupportedCaseError(ValueError):
    pass


def _check(n: int, p: int) -> None:
    if n not in (2, 3) or not 0 <= p <= n - 1:
        raise UnsupportedCaseError(f"surface calculus for n={n}, p={p} is not supported")


def pullback(w: np.ndarray, E: np.ndarray, p: int) -> np.ndarray:
    """Tangential coefficients in the frame E of an ambient p-form value."""
    return np.einsum("...IA,...I->...A", algebra.compound_matrix(E, p), w)


def tangential_part(wjet: J.FormJet, nu: np.ndarray, Dnu: np.ndarray) -> J.FormJet:
    """Order-1 jet of w_T = w - nu ^ (nu -| w)."""
    if wjet.p == 0:
        return wjet.truncate(1)
    V = [nu, Dnu]
    nuform = J.FormJet(wjet.n, 1, [nu, Dnu])
    inner = J.interior_field(V, wjet.truncate(1))
    return wjet.truncate(1) - J.wedge_jets(nuform, inner)


def surface_codifferential_values(wjet: J.FormJet, nu, Dnu, E, grad_f=None) -> np.ndarray:
    """delta^dM (or delta_f^dM when grad_f is given) of iota^* w, frame coefficients."""
    n, p = wjet.n, wjet.p
    N = nu.shape[0]
    if p == 0:
        return np.zeros((N, 0))
    wT = tangential_part(wjet, nu, Dnu)
    P = np.eye(n)[None] - nu[:, :, None] * nu[:, None, :]
    T = algebra.interior_tensor(n, p)
    amb = -np.einsum("nkj,KjI,nkI->nK", P, T, wT.data[1])
    if grad_f is not None:
        gt = np.einsum("nij,nj->ni", P, grad_f)
        amb = amb + algebra.interior(gt, wjet.value, n, p)
    return pullback(amb, E, p - 1)


def surface_d_values(wjet: J.FormJet, E) -> np.ndarray:
    """d^dM (iota^* w) = iota^* (d w)."""
    return pullback(J.exterior_d(wjet).value, E, wjet.p + 1)


def surface_laplacian_values(ujet: J.FormJet, nu, Dnu, E, grad_f=None) -> np.ndarray:
    """Delta_f^dM u = delta_f^dM d^dM u for a function u (order-2 jet)."""
    du = J.exterior_d(ujet)
    return surface_codifferential_values(du, nu, Dnu, E, grad_f)[:, 0]


def shape_action_values(w: np.ndarray, S: np.ndarray, E: np.ndarray, p: int) -> np.ndarray:
    """S^[p] (iota^* w) in frame coefficients."""
    beta = pullback(w, E, p)
    return np.einsum("nAB,nB->nA", algebra.derivation_matrix(S, p), beta)


def surface_calculus(op: str, alpha: AnalyticForm, f: WeightField | None, domain, x) -> FormValue:
    """op in {d, delta_f, laplacian_f, shape} acting on the boundary form
    iota^* alpha (a function when alpha is a 0-form).  Results are frame
    coefficients of a form on the (n-1)-dimensional boundary."""
    single = _single(x)
    x2 = np.atleast_2d(np.asarray(x, dtype=float))
    n, p = alpha.n, alpha.p
    _check(n, p)
    domain.check_on_boundary(x2)
    nu, E, S = domain.boundary_frames(x2)
    _, Dnu = domain.normal_and_jacobian(x2)
    g = None if f is None else f.grad(x2)
    if op == "d":
        if p + 1 > n - 1:
            raise UnsupportedCaseError("d of a top-degree boundary form")
        val, deg = surface_d_values(alpha.jet(x2, 1), E), p + 1
    elif op == "delta_f":
        if p == 0:
            raise UnsupportedCaseError("codifferential of a function")
        val, deg = surface_codifferential_values(alpha.jet(x2, 1), nu, Dnu, E, g), p - 1
    elif op == "laplacian_f":
        if p != 0:
            raise UnsupportedCaseError("boundary Laplacian is provided on functions only")
        val, deg = surface_laplacian_values(alpha.jet(x2, 2), nu, Dnu, E, g)[:, None], 0
    elif op == "shape":
        val, deg = shape_action_values(alpha(x2), S, E, p), p
    else:
        raise ValueError(f"unknown surface operation {op!r}")
    return FormValue(n - 1, deg, val[0] if single else val)
