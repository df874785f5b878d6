"""P2 finite elements on the boundary hypersurface.

The boundary facets of a volume mesh, mapped through the exact element
map, triangulate the boundary exactly.  On functions the weighted boundary
Laplacian has the quadratic form int |grad^dM u|^2 e^{-f} dS.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..forms.fields import WeightField
from ..geometry.mesh import Mesh
from ..geometry.quadrature import simplex_rule
from .dofs import P2Nodes, p2_basis, p2_nodes
from .eigen import EigenResult, count_zero_modes, eig_small, semidefinite_shift


class OpenBoundaryError(ValueError):
    pass


def _face_reference(n: int, local: int) -> np.ndarray:
    ref = np.vstack([np.zeros(n), np.eye(n)])
    return np.delete(ref, local, axis=0)


def _check_closed(faces: np.ndarray) -> None:
    """Every ridge of a closed boundary is shared by exactly two facets."""
    d = faces.shape[1]
    ridges = {}
    for f in faces:
        for i in range(d):
            r = tuple(sorted(np.delete(f, i)))
            ridges[r] = ridges.get(r, 0) + 1
    if any(c != 2 for c in ridges.values()):
        raise OpenBoundaryError("boundary mesh is not closed")


def boundary_operators(mesh: Mesh, f: WeightField | None, q: int = 6, nodes: P2Nodes | None = None):
    """(M, K, node ids) for P2 functions on the boundary."""
    n = mesh.n
    nodes = p2_nodes(mesh) if nodes is None else nodes
    _check_closed(mesh.boundary_facets)
    ids = nodes.boundary
    local_ids = np.searchsorted(ids, nodes.boundary_faces)
    eta, w = simplex_rule(n - 1, q)
    phi, dphi = p2_basis(eta)
    nb = phi.shape[1]
    rows, cols, mv, kv = [], [], [], []
    for loc in range(n + 1):
        sel = np.nonzero(mesh.facet_local == loc)[0]
        if len(sel) == 0:
            continue
        FV = _face_reference(n, loc)
        xi = FV[0] + eta @ (FV[1:] - FV[0])
        Bf = (FV[1:] - FV[0]).T
        x, J = mesh.map_reference(mesh.facet_owner[sel], xi)
        T = J @ Bf
        G = np.einsum("fqia,fqib->fqab", T, T)
        dS = np.sqrt(np.linalg.det(G))
        Ginv = np.linalg.inv(G)
        xb = mesh.domain.project(x.reshape(-1, n))
        dens = np.ones(len(xb)) if f is None else f.density(xb)
        W = dS * w[None, :] * dens.reshape(dS.shape)
        Ml = np.einsum("fq,qa,qb->fab", W, phi, phi)
        Kl = np.einsum("fq,qai,fqij,qbj->fab", W, dphi, Ginv, dphi)
        gid = local_ids[sel]
        rows.append(np.repeat(gid, nb, axis=1).ravel())
        cols.append(np.tile(gid, (1, nb)).ravel())
        mv.append(Ml.ravel())
        kv.append(Kl.ravel())
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    N = len(ids)
    M = sp.csr_matrix((np.concatenate(mv), (rows, cols)), shape=(N, N))
    K = sp.csr_matrix((np.concatenate(kv), (rows, cols)), shape=(N, N))
    return ((M + M.T) * 0.5).tocsr(), ((K + K.T) * 0.5).tocsr(), ids


def boundary_function_spectrum(mesh: Mesh, f: WeightField | None, k: int = 6, seed: int = 0,
                               method: str = "lanczos", q: int = 6) -> EigenResult:
    """Smallest eigenvalues of the weighted boundary Laplacian on functions.

    ``meta['positive']`` lists the eigenvalues above the zero block (the
    constants on each boundary component), ``meta['zero_modes']`` its size.
    """
    M, K, ids = boundary_operators(mesh, f, q)
    res = eig_small(K, M, k, shift=semidefinite_shift(K, M), seed=seed, method=method)
    c = count_zero_modes(res.eigenvalues)
    res.meta.update({
        "problem": "boundary-functions", "n": mesh.n, "h": float(mesh.h),
        "weight": None if f is None else f.describe(), "dofs": len(ids),
        "zero_modes": c, "positive": [float(v) for v in res.eigenvalues[c:]],
    })
    return res


def multiplicity(values, target: float, rel: float = 1e-3) -> int:
    """How many values agree with ``target`` to relative accuracy ``rel``."""
    v = np.asarray(values, dtype=float)
    return int(np.sum(np.abs(v - target) <= rel * abs(target)))
