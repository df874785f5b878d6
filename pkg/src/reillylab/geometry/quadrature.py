"""Collapsed-coordinate (conical product) simplex rules and mesh quadrature.

The rules combine Gauss-Jacobi points in the collapsed directions, so all
weights are positive and any exactness order is available.  Integration
runs over the curved elements Phi(T) of a mesh: the physical weight is the
reference weight times |det(DPhi A)|.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .mesh import Mesh


class UnsupportedOrderError(ValueError):
    pass


def _gauss_jacobi01(k: int, alpha: int):
    """Nodes/weights for int_0^1 (1-u)^alpha g(u) du."""
    x, w = roots_jacobi(k, alpha, 0)
    return (x + 1) / 2, w / 2 ** (alpha + 1)


@lru_cache(maxsize=None)
def simplex_rule(dim: int, q: int):
    """Points (Q, dim) and weights (Q,) on the unit simplex, exact to degree q."""
    if not 1 <= q <= 12:
        raise UnsupportedOrderError(f"quadrature order {q} outside [1, 12]")
    k = (q + 2) // 2  # 2k - 1 >= q
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    if dim == 1:
        u, w = _gauss_jacobi01(k, 0)
        return u[:, None], w
    if dim == 2:
        u, wu = _gauss_jacobi01(k, 1)
        v, wv = _gauss_jacobi01(k, 0)
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = np.stack([U.ravel(), ((1 - U) * V).ravel()], axis=1)
        return pts, np.outer(wu, wv).ravel()
    if dim == 3:
        u, wu = _gauss_jacobi01(k, 2)
        v, wv = _gauss_jacobi01(k, 1)
        s, ws = _gauss_jacobi01(k, 0)
        U, V, S = np.meshgrid(u, v, s, indexing="ij")
        pts = np.stack([U.ravel(), ((1 - U) * V).ravel(), ((1 - U) * (1 - V) * S).ravel()], axis=1)
        return pts, np.einsum("i,j,k->ijk", wu, wv, ws).ravel()
    raise UnsupportedOrderError("simplex dimension must be 0..3")


def _face_vertices(n: int, local: int) -> np.ndarray:
    """Reference coordinates of the face opposite vertex ``local``."""
    ref = np.vstack([np.zeros(n), np.eye(n)])
    return np.delete(ref, local, axis=0)


@dataclass
class QuadratureSet:
    """Quadrature data on a mesh: flattened interior and boundary points.

    interior_x (N, n), interior_w (N,), interior_elem (N,) and the
    boundary analogues; weights include the curved-element Jacobians.
    """

    mesh: Mesh
    q: int
    interior_x: np.ndarray = field(repr=False, default=None)
    interior_w: np.ndarray = field(repr=False, default=None)
    interior_elem: np.ndarray = field(repr=False, default=None)
    boundary_x: np.ndarray = field(repr=False, default=None)
    boundary_w: np.ndarray = field(repr=False, default=None)
    boundary_facet: np.ndarray = field(repr=False, default=None)

    def integrate_interior(self, values: np.ndarray) -> float:
        return float(np.dot(self.interior_w, values))

    def integrate_boundary(self, values: np.ndarray) -> float:
        return float(np.dot(self.boundary_w, values))

    def interior_chunks(self, size: int = 65536):
        for s in range(0, len(self.interior_w), size):
            yield self.interior_x[s:s + size], self.interior_w[s:s + size]

    def boundary_chunks(self, size: int = 65536):
        for s in range(0, len(self.boundary_w), size):
            yield self.boundary_x[s:s + size], self.boundary_w[s:s + size]


def quadrature_rule(mesh: Mesh, q: int, chunk_elems: int = 4096) -> QuadratureSet:
    n = mesh.n
    xi, wr = simplex_rule(n, q)
    xs, ws, es = [], [], []
    E = len(mesh.simplices)
    for s in range(0, E, chunk_elems):
        elems = np.arange(s, min(E, s + chunk_elems))
        x, J = mesh.map_reference(elems, xi)
        det = np.abs(np.linalg.det(J))
        xs.append(x.reshape(-1, n))
        ws.append((det * wr[None, :]).ravel())
        es.append(np.repeat(elems, len(wr)))
    qs = QuadratureSet(mesh, q, np.concatenate(xs), np.concatenate(ws), np.concatenate(es))

    # boundary: rule on the reference face, mapped through the owning element
    eta, wf = simplex_rule(n - 1, q)
    bx, bw, bfid = [], [], []
    for local in range(n + 1):
        sel = np.nonzero(mesh.facet_local == local)[0]
        if len(sel) == 0:
            continue
        FV = _face_vertices(n, local)
        xi_f = FV[0] + eta @ (FV[1:] - FV[0])
        Bf = (FV[1:] - FV[0]).T  # (n, n-1)
        for s in range(0, len(sel), chunk_elems):
            fs = sel[s:s + chunk_elems]
            x, J = mesh.map_reference(mesh.facet_owner[fs], xi_f)
            T = J @ Bf
            G = np.einsum("fqia,fqib->fqab", T, T)
            dS = np.sqrt(np.linalg.det(G))
            bx.append(x.reshape(-1, n))
            bw.append((dS * wf[None, :]).ravel())
            bfid.append(np.repeat(fs, len(wf)))
    bx = np.concatenate(bx)
    # exact analytic boundary, up to rounding
    qs.boundary_x = mesh.domain.project(bx)
    qs.boundary_w = np.concatenate(bw)
    qs.boundary_facet = np.concatenate(bfid)
    order = np.argsort(qs.boundary_facet, kind="stable")
    qs.boundary_x, qs.boundary_w, qs.boundary_facet = qs.boundary_x[order], qs.boundary_w[order], qs.boundary_facet[order]
    return qs


def monomial_integral(exponents) -> float:
    """Exact integral of prod xi_i^e_i over the unit simplex."""
    from math import factorial
    e = list(exponents)
    num = np.prod([factorial(a) for a in e])
    return num / factorial(sum(e) + len(e))

