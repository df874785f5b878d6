"""Weighted mass and energy matrices for P2 vector-proxy forms.

For a p-form u = sum_I u_I dx_I with each u_I a P2 field,

    u^T K v = int <du, dv> + <delta_f u, delta_f v> e^{-f} dx,
    u^T M v = int <u, v> e^{-f} dx,

integrated over the curved elements with a collapsed-coordinate rule.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..forms import algebra
from ..forms.fields import WeightField
from ..geometry.mesh import Mesh
from ..geometry.quadrature import simplex_rule
from .dofs import P2Nodes, p2_basis, p2_nodes


class SingularElementError(RuntimeError):
    pass


def _scatter(elem_nodes: np.ndarray, C: int):
    """Global DOF ids (E, nloc*C) ordered (local node, component)."""
    return (elem_nodes[:, :, None] * C + np.arange(C)[None, None, :]).reshape(len(elem_nodes), -1)


def element_data(mesh: Mesh, elems: np.ndarray, q: int, f: WeightField | None):
    """Quadrature data on a chunk of elements: basis values (Q, nloc),
    physical gradients (E, Q, nloc, n), weights including e^{-f} (E, Q),
    points (E, Q, n) and grad f (E, Q, n)."""
    n = mesh.n
    xi, w = simplex_rule(n, q)
    phi, dphi = p2_basis(xi)
    x, J = mesh.map_reference(elems, xi)
    det = np.linalg.det(J)
    if np.any(np.abs(det) < 1e-14):
        raise SingularElementError("singular element map")
    Jinv = np.linalg.inv(J)
    G = np.einsum("qaj,eqjk->eqak", dphi, Jinv)
    W = np.abs(det) * w[None, :]
    flat = x.reshape(-1, n)
    if f is None or f.is_constant:
        grad = np.zeros_like(x)
        dens = np.ones(W.shape) if f is None else f.density(flat).reshape(W.shape)
    else:
        jet = f.jet(flat, 1)
        dens = np.exp(-jet.data[0][:, 0]).reshape(W.shape)
        grad = jet.data[1][..., 0].reshape(x.shape)
    return phi, G, W * dens, x, grad


def assemble_operators(mesh: Mesh, f: WeightField | None, p: int, q: int = 6,
                       nodes: P2Nodes | None = None, chunk: int = 2048):
    """Global (M, K) over all unconstrained DOFs ``node * C + I``."""
    M, Kd, Kdel = assemble_parts(mesh, f, p, q, nodes, chunk)
    return M, (Kd + Kdel).tocsr()


def assemble_parts(mesh: Mesh, f: WeightField | None, p: int, q: int = 6,
                   nodes: P2Nodes | None = None, chunk: int = 2048):
    """(M, K_d, K_delta): mass and the two halves of the energy form."""
    if q < 4:
        raise ValueError("quadrature order must be at least twice the element degree")
    n = mesh.n
    if not 0 <= p <= n:
        raise algebra.DegreeError(f"form degree {p} outside [0, {n}]")
    nodes = p2_nodes(mesh) if nodes is None else nodes
    C = algebra.dim(n, p)
    Gd = algebra.d_tensor(n, p) if p < n else None
    T = algebra.interior_tensor(n, p) if p > 0 else None
    eye = np.eye(C)
    rows, cols, mv, kv, kw = [], [], [], [], []
    E = len(mesh.simplices)
    for s in range(0, E, chunk):
        elems = np.arange(s, min(E, s + chunk))
        phi, G, W, _, grad = element_data(mesh, elems, q, f)
        nloc = phi.shape[1]
        Ms = np.einsum("eq,qa,qb->eab", W, phi, phi)
        Mloc = np.einsum("eab,IJ->eaIbJ", Ms, eye).reshape(len(elems), nloc * C, nloc * C)
        Kd = np.zeros_like(Mloc)
        Kdel = np.zeros_like(Mloc)
        if Gd is not None:
            Bd = np.einsum("JkI,eqak->eqJaI", Gd, G).reshape(len(elems), len(W[0]), Gd.shape[0], -1)
            Kd += np.einsum("eq,eqJr,eqJs->ers", W, Bd, Bd)
        if T is not None:
            # delta_f u = -sum_k e_k -| d_k u + grad f -| u
            Bdel = -np.einsum("KkI,eqak->eqKaI", T, G) \
                + np.einsum("KkI,eqk,qa->eqKaI", T, grad, phi)
            Bdel = Bdel.reshape(len(elems), len(W[0]), T.shape[0], -1)
            Kdel += np.einsum("eq,eqJr,eqJs->ers", W, Bdel, Bdel)
        ids = _scatter(nodes.elem_nodes[elems], C)
        rows.append(np.repeat(ids, ids.shape[1], axis=1).ravel())
        cols.append(np.tile(ids, (1, ids.shape[1])).ravel())
        mv.append(Mloc.ravel())
        kv.append(Kd.ravel())
        kw.append(Kdel.ravel())
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    N = nodes.count * C
    out = []
    for vals in (mv, kv, kw):
        A = sp.csr_matrix((np.concatenate(vals), (rows, cols)), shape=(N, N))
        out.append(((A + A.T) * 0.5).tocsr())
    return tuple(out)


def interpolate(nodes: P2Nodes, fn) -> np.ndarray:
    """Nodal interpolation of a callable returning (N, C) coefficients."""
    return np.asarray(fn(nodes.coords))


def coordinate_dump(A: sp.spmatrix) -> str:
    """Matrix in coordinate text format (1-based, one entry per line)."""
    A = sp.coo_matrix(A)
    lines = [f"{A.shape[0]} {A.shape[1]} {A.nnz}"]
    lines += [f"{i + 1} {j + 1} {v:.17g}" for i, j, v in zip(A.row, A.col, A.data)]
    return "\n".join(lines) + "\n"
