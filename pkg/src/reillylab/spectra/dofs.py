"""Degree-2 Lagrange node sets and constrained form DOF spaces."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from ..forms import algebra
from ..geometry.mesh import Mesh

CONSTRAINTS = {
    "none": "none",
    "full": "full",
    "full-trace-zero": "full",
    "normal": "normal",
    "normal-trace-zero": "normal",
    "tangential": "tangential",
    "tangential-trace-zero": "tangential",
}


class EmptySpaceError(ValueError):
    """Raised when the constraints leave no free degrees of freedom."""


def reference_nodes(n: int) -> np.ndarray:
    """Reference coordinates of the P2 nodes: vertices, then edge midpoints."""
    ref = np.vstack([np.zeros(n), np.eye(n)])
    mids = [(ref[i] + ref[j]) / 2 for i, j in combinations(range(n + 1), 2)]
    return np.vstack([ref, mids])


def _barycentric(xi: np.ndarray) -> np.ndarray:
    return np.hstack([1 - xi.sum(axis=1, keepdims=True), xi])


def p2_basis(xi: np.ndarray):
    """Values (Q, nloc) and reference gradients (Q, nloc, n) of the P2 basis."""
    xi = np.atleast_2d(xi)
    Q, n = xi.shape
    lam = _barycentric(xi)
    dlam = np.vstack([-np.ones(n), np.eye(n)])  # (n+1, n)
    vals, grads = [], []
    for i in range(n + 1):
        vals.append(lam[:, i] * (2 * lam[:, i] - 1))
        grads.append((4 * lam[:, i] - 1)[:, None] * dlam[i])
    for i, j in combinations(range(n + 1), 2):
        vals.append(4 * lam[:, i] * lam[:, j])
        grads.append(4 * (lam[:, j][:, None] * dlam[i] + lam[:, i][:, None] * dlam[j]))
    return np.stack(vals, axis=1), np.stack(grads, axis=1)


@dataclass
class P2Nodes:
    """Global P2 node numbering of a mesh (vertices first, then edges)."""

    mesh: Mesh
    coords: np.ndarray          # (Nn, n)
    elem_nodes: np.ndarray      # (E, nloc)
    boundary: np.ndarray        # sorted boundary node ids
    boundary_faces: np.ndarray  # (F, nloc_face) node ids of each boundary facet

    @property
    def count(self) -> int:
        return len(self.coords)


def p2_nodes(mesh: Mesh) -> P2Nodes:
    n = mesh.n
    simp = mesh.simplices
    V = len(mesh.vertices)
    pairs = list(combinations(range(n + 1), 2))
    edges = np.concatenate([np.sort(simp[:, [i, j]], axis=1) for i, j in pairs])
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    inv = inv.reshape(len(pairs), len(simp)).T
    elem_nodes = np.hstack([simp, V + inv])

    # edge midpoints through the exact element map of a first owner
    first = np.full(len(uniq), -1)
    first_loc = np.zeros(len(uniq), dtype=int)
    for loc in range(len(pairs)):
        sel = first[inv[:, loc]] < 0
        first[inv[sel, loc]] = np.nonzero(sel)[0]
        first_loc[inv[sel, loc]] = loc
    ref = reference_nodes(n)
    mids = np.empty((len(uniq), n))
    for loc in range(len(pairs)):
        ids = np.nonzero(first_loc == loc)[0]
        if len(ids):
            x, _ = mesh.map_reference(first[ids], ref[n + 1 + loc][None])
            mids[ids] = x[:, 0]
    coords = np.vstack([mesh.vertices, mids])

    # boundary facets in node numbering: facet vertices then facet edges
    fnodes = []
    for e, loc in zip(mesh.facet_owner, mesh.facet_local):
        keep = [i for i in range(n + 1) if i != loc]
        ids = [elem_nodes[e, i] for i in keep]
        ids += [elem_nodes[e, n + 1 + pairs.index((i, j))] for i, j in combinations(keep, 2)]
        fnodes.append(ids)
    fnodes = np.array(fnodes, dtype=int).reshape(len(mesh.facet_owner), -1)
    bnodes = np.unique(fnodes)
    coords[bnodes] = mesh.domain.project(coords[bnodes])
    return P2Nodes(mesh, coords, elem_nodes, bnodes, fnodes)


@dataclass
class DofSpace:
    """p-form coefficients per P2 node with boundary constraints.

    Global unconstrained DOF ``node * C + I`` is the dx_I coefficient.  At
    boundary nodes the coefficient block is rotated into the frame
    (nu, e_1, ..., e_{n-1}); rotated components whose multi-index contains
    the normal direction make up nu -| w, the others the tangential trace.
    """

    nodes: P2Nodes
    p: int
    kind: str
    rotations: np.ndarray = field(repr=False)   # (Nb, C, C), columns = frame basis
    normal_mask: np.ndarray = field(repr=False)  # (C,) rotated component contains nu
    free: np.ndarray = field(repr=False)
    constrained: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.nodes.mesh.n

    @property
    def C(self) -> int:
        return algebra.dim(self.n, self.p)

    @property
    def total(self) -> int:
        return self.nodes.count * self.C

    @property
    def size(self) -> int:
        return len(self.free)

    def rotation_matrix(self) -> sp.csr_matrix:
        """Q with w_full = Q w_rotated (orthogonal, block diagonal)."""
        C = self.C
        Nn = self.nodes.count
        rows, cols, vals = [], [], []
        interior = np.setdiff1d(np.arange(Nn), self.nodes.boundary)
        for I in range(C):
            rows.append(interior * C + I)
            cols.append(interior * C + I)
            vals.append(np.ones(len(interior)))
        b = self.nodes.boundary
        for I in range(C):
            for A in range(C):
                rows.append(b * C + I)
                cols.append(b * C + A)
                vals.append(self.rotations[:, I, A])
        rows, cols, vals = map(np.concatenate, (rows, cols, vals))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.total, self.total))

    def prolongation(self) -> sp.csr_matrix:
        """Map from free DOFs to unconstrained dx_I coefficients."""
        return self.rotation_matrix()[:, self.free].tocsr()

    def restrict(self, A: sp.spmatrix) -> sp.csr_matrix:
        P = self.prolongation()
        out = (P.T @ A @ P).tocsr()
        return ((out + out.T) * 0.5).tocsr()

    def expand(self, u: np.ndarray) -> np.ndarray:
        """Free-DOF vector(s) -> node coefficients (Nn, C) (or (Nn, C, k))."""
        full = self.prolongation() @ u
        return full.reshape((self.nodes.count, self.C) + full.shape[1:])


def boundary_rotations(nodes: P2Nodes, p: int):
    mesh = nodes.mesh
    n = mesh.n
    x = nodes.coords[nodes.boundary]
    nu, E, _ = mesh.domain.boundary_frames(x)
    F = np.concatenate([nu[:, :, None], E], axis=2)
    R = algebra.compound_matrix(F, p)
    mask = np.array([0 in I for I in algebra.multi_indices(n, p)], dtype=bool)
    return R, mask


def dof_space(nodes: P2Nodes, p: int, kind: str = "none") -> DofSpace:
    if kind not in CONSTRAINTS:
        raise ValueError(f"unknown constraint kind {kind!r}")
    kind = CONSTRAINTS[kind]
    n = nodes.mesh.n
    if not 0 <= p <= n:
        raise algebra.DegreeError(f"form degree {p} outside [0, {n}]")
    C = algebra.dim(n, p)
    R, mask = boundary_rotations(nodes, p)
    b = nodes.boundary
    if kind == "none":
        drop = np.zeros(C, dtype=bool)
    elif kind == "full":
        drop = np.ones(C, dtype=bool)
    elif kind == "normal":
        drop = mask
    else:
        drop = ~mask
    constrained = (b[:, None] * C + np.nonzero(drop)[0][None, :]).ravel()
    constrained = np.sort(constrained)
    free = np.setdiff1d(np.arange(nodes.count * C), constrained)
    if len(free) == 0:
        raise EmptySpaceError("constrained space is empty")
    return DofSpace(nodes, p, kind, R, mask, free, constrained)
