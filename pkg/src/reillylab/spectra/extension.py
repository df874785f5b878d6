"""Discrete f-harmonic extension of exact boundary forms.

Given w = d^dM alpha on the boundary, find the P2 p-form w_hat minimizing
int |d w_hat|^2 + |delta_f w_hat|^2 dmu_f with tangential trace w.  The
tangential components at boundary nodes are eliminated (rotated DOFs), the
normal components stay free, and the reduced system is solved directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..forms import jets as J
from ..forms.fields import AnalyticForm, WeightField
from ..geometry.mesh import Mesh
from .assembly import assemble_parts
from .dofs import P2Nodes, dof_space, p2_nodes
from .eigen import count_zero_modes, eig_small, semidefinite_shift


class InconsistentTraceError(ValueError):
    pass


@dataclass
class Extension:
    """Solution of the extension problem and its diagnostics."""

    nodes: P2Nodes = field(repr=False)
    p: int
    coeffs: np.ndarray = field(repr=False)    # (Nn, C) dx_I coefficients
    rotated: np.ndarray = field(repr=False)   # (Nn, C) boundary-frame coefficients
    energy: float
    d_norm: float
    delta_norm: float
    kernel_dim: int
    kernel_spectrum: list

    @property
    def unique(self) -> bool:
        return self.kernel_dim == 0

    def normal_part(self) -> np.ndarray:
        """nu -| w_hat at boundary nodes in the tangent frame, (Nb, C(n-1, p-1))."""
        from ..forms import algebra
        n = self.nodes.mesh.n
        mask = np.array([0 in I for I in algebra.multi_indices(n, self.p)])
        return self.rotated[self.nodes.boundary][:, mask]

    def to_dict(self) -> dict:
        return {"p": self.p, "energy": self.energy, "d_norm": self.d_norm,
                "delta_norm": self.delta_norm, "kernel_dim": self.kernel_dim,
                "kernel_spectrum": self.kernel_spectrum}


def relative_kernel(mesh: Mesh, f: WeightField | None, p: int, k: int = 4, seed: int = 0,
                    nodes: P2Nodes | None = None):
    """Zero-mode count of the energy on forms with vanishing tangential trace
    (discrete f-harmonic fields with relative boundary conditions)."""
    nodes = p2_nodes(mesh) if nodes is None else nodes
    M, Kd, Kdel = assemble_parts(mesh, f, p, nodes=nodes)
    S = dof_space(nodes, p, "tangential")
    K, Mr = S.restrict(Kd + Kdel), S.restrict(M)
    res = eig_small(K, Mr, k, shift=semidefinite_shift(K, Mr), seed=seed)
    return count_zero_modes(res.eigenvalues), res


def harmonic_extension(alpha: AnalyticForm | None, mesh: Mesh, f: WeightField | None, p: int,
                       nodes: P2Nodes | None = None, seed: int = 0, kernel_k: int = 4) -> Extension:
    """Extension of w = d^dM (iota^* alpha); alpha None means w = 0."""
    nodes = p2_nodes(mesh) if nodes is None else nodes
    n = mesh.n
    if alpha is not None and alpha.p != p - 1:
        raise InconsistentTraceError("alpha must be a (p-1)-form")
    M, Kd, Kdel = assemble_parts(mesh, f, p, nodes=nodes)
    K = (Kd + Kdel).tocsr()
    S = dof_space(nodes, p, "tangential")
    Q = S.rotation_matrix()
    C = S.C
    b = nodes.boundary
    g = np.zeros((len(b), C))
    if alpha is not None:
        xb = nodes.coords[b]
        dval = J.exterior_d(alpha.jet(xb, 1)).value            # ambient d alpha
        g = np.einsum("nIA,nI->nA", S.rotations, dval)         # rotated coefficients
    z = np.zeros(S.total)
    cons = S.constrained
    # constrained ids are boundary-node tangential components
    bpos = np.searchsorted(b, cons // C)
    z[cons] = g[bpos, cons % C]
    Kr = (Q.T @ K @ Q).tocsr()
    Kr = ((Kr + Kr.T) * 0.5).tocsr()
    Mr = (Q.T @ M @ Q).tocsr()
    free = S.free
    Kff = Kr[free][:, free].tocsc()
    Mff = Mr[free][:, free].tocsr()
    rhs = -(Kr[free][:, cons] @ z[cons])

    spec = eig_small(Kff, Mff, kernel_k, shift=semidefinite_shift(Kff, Mff), seed=seed)
    kdim = count_zero_modes(spec.eigenvalues)
    A = Kff
    if kdim:
        # fix the kernel component to zero (minimal-mass solution)
        Z = Mff @ spec.vectors[:, :kdim]
        A = (Kff + sp.csr_matrix(Z @ Z.T)).tocsc() if Kff.shape[0] <= 4000 else Kff
        rhs = rhs - Z @ (spec.vectors[:, :kdim].T @ rhs)
    zf = spla.splu(A, permc_spec="MMD_AT_PLUS_A").solve(rhs) if A.shape[0] else rhs
    z[free] = zf
    c = Q @ z
    energy = float(c @ (K @ c))
    d2 = float(c @ (Kd @ c))
    del2 = float(c @ (Kdel @ c))
    return Extension(nodes, p, c.reshape(-1, C), z.reshape(-1, C), energy,
                     float(np.sqrt(max(d2, 0.0))), float(np.sqrt(max(del2, 0.0))),
                     kdim, [float(v) for v in spec.eigenvalues])
