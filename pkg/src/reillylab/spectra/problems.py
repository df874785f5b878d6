"""The interior eigenvalue problems on p-forms.

Second order (pencil (K, M) on a constrained space):
  dirichlet  full trace zero,    lambda_1
  neumann    normal trace zero,  mu_1 (nu -| d w = 0 is natural)

Fourth order, mixed form with the unconstrained auxiliary variable:
  A = K_{0a} M^{-1} K_{a0} on the full-trace-zero space,
  clamped    A u = Gamma M_00 u
  buckling   A u = Lambda K_00 u
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..forms.fields import WeightField
from ..geometry.mesh import Mesh
from .assembly import assemble_operators
from .dofs import DofSpace, P2Nodes, dof_space, p2_nodes
from .eigen import (EigenResult, FactorizationError, count_zero_modes, eig_small,
                    semidefinite_shift)

SECOND_ORDER = {"dirichlet": "full", "neumann": "normal"}
FOURTH_ORDER = ("buckling", "clamped")


@dataclass
class Discretization:
    """Assembled P2 operators for one (mesh, f, p)."""

    mesh: Mesh
    f: WeightField | None
    p: int
    nodes: P2Nodes
    M: sp.csr_matrix = field(repr=False)
    K: sp.csr_matrix = field(repr=False)
    _spaces: dict = field(default_factory=dict, repr=False)

    def space(self, kind: str) -> DofSpace:
        if kind not in self._spaces:
            self._spaces[kind] = dof_space(self.nodes, self.p, kind)
        return self._spaces[kind]

    def pencil(self, kind: str):
        S = self.space(kind)
        return S.restrict(self.K), S.restrict(self.M), S


def discretize(mesh: Mesh, f: WeightField | None, p: int, q: int = 6,
               nodes: P2Nodes | None = None) -> Discretization:
    nodes = p2_nodes(mesh) if nodes is None else nodes
    M, K = assemble_operators(mesh, f, p, q, nodes)
    return Discretization(mesh, f, p, nodes, M, K)


def _meta(disc: Discretization, problem: str, extra: dict) -> dict:
    out = {"problem": problem, "p": disc.p, "n": disc.mesh.n, "h": float(disc.mesh.h),
           "weight": None if disc.f is None else disc.f.describe()}
    out.update(extra)
    return out


def rayleigh_quotients(A, B, X: np.ndarray) -> np.ndarray:
    AX = A(X) if callable(A) and not sp.issparse(A) else A @ X
    return np.einsum("ij,ij->j", X, AX) / np.einsum("ij,ij->j", X, B @ X)


def solve_second_order(problem: str, disc: Discretization, k: int = 6, seed: int = 0,
                       method: str = "lanczos") -> EigenResult:
    if problem not in SECOND_ORDER:
        raise ValueError(f"unknown second-order problem {problem!r}")
    if k < 1:
        raise ValueError("k must be positive")
    K, M, S = disc.pencil(SECOND_ORDER[problem])
    shift = 0.0 if problem == "dirichlet" else semidefinite_shift(K, M)
    res = _solve_with_retry(K, M, k, shift, seed, method)
    rq = rayleigh_quotients(K, M, res.vectors)
    res.meta.update(_meta(disc, problem, {
        "dofs": S.size,
        "rayleigh_gap": float(np.max(np.abs(rq - res.eigenvalues) / np.maximum(1.0, np.abs(res.eigenvalues)))),
    }))
    return res


def _solve_with_retry(A, B, k, shift, seed, method, solve=None, retries: int = 3):
    for attempt in range(retries + 1):
        try:
            return eig_small(A, B, k, shift=shift, seed=seed, method=method, solve=solve)
        except FactorizationError:
            if attempt == retries or solve is not None:
                raise
            shift = shift * 10 if shift else -1e-10
    raise AssertionError("unreachable")


@dataclass
class MixedOperator:
    """A = K_{0a} M^{-1} K_{a0}, applied with one sparse solve per product."""

    K0a: sp.csr_matrix = field(repr=False)
    M: sp.csr_matrix = field(repr=False)
    _lu: object = field(default=None, repr=False)

    def __post_init__(self):
        try:
            self._lu = spla.splu(self.M.tocsc(), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise FactorizationError(f"mass matrix: {exc}") from exc

    @property
    def shape(self):
        return (self.K0a.shape[0], self.K0a.shape[0])

    def __call__(self, X: np.ndarray) -> np.ndarray:
        Y = self.K0a.T @ X
        return self.K0a @ self._lu.solve(np.asarray(Y).reshape(self.M.shape[0], -1)).reshape(Y.shape)

    def dense(self) -> np.ndarray:
        return self(np.eye(self.shape[0]))

    def shifted_solver(self, B: sp.spmatrix, shift: float):
        """Solver for (A - shift B) x = b via the sparse saddle system
        [[-shift B, K_0a], [K_a0, -M]] [x; y] = [b; 0]."""
        n0, na = self.K0a.shape
        top = -shift * B if shift else sp.csr_matrix((n0, n0))
        S = sp.bmat([[top, self.K0a], [self.K0a.T, -self.M]], format="csc")
        try:
            # the zero block defeats symmetric orderings; COLAMD keeps fill low
            lu = spla.splu(S, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise FactorizationError(str(exc)) from exc

        def solve(b):
            b2 = b.reshape(n0, -1)
            rhs = np.vstack([b2, np.zeros((na, b2.shape[1]))])
            return lu.solve(rhs)[:n0].reshape(b.shape)

        return solve


def mixed_operator(disc: Discretization) -> tuple:
    S0 = disc.space("full")
    P0 = S0.prolongation()
    K0a = (P0.T @ disc.K).tocsr()
    A = MixedOperator(K0a, disc.M)
    return A, S0, P0


def solve_fourth_order(problem: str, disc: Discretization, k: int = 6, seed: int = 0,
                       method: str = "lanczos") -> EigenResult:
    if problem not in FOURTH_ORDER:
        raise ValueError(f"unknown fourth-order problem {problem!r}")
    A, S0, _ = mixed_operator(disc)
    K00, M00 = S0.restrict(disc.K), S0.restrict(disc.M)
    B = M00 if problem == "clamped" else K00
    shift = 0.0
    if method == "dense":
        res = eig_small(A.dense(), B, k, method="dense")
    else:
        res = eig_small(A, B, k, shift=shift, seed=seed, method="lanczos",
                        solve=A.shifted_solver(B, shift))
    rq = rayleigh_quotients(A, B, res.vectors)
    res.meta.update(_meta(disc, problem, {
        "dofs": S0.size,
        "rayleigh_gap": float(np.max(np.abs(rq - res.eigenvalues) / np.maximum(1.0, np.abs(res.eigenvalues)))),
    }))
    return res


def betti_zero_count(disc: Discretization, k: int | None = None, tol: float = 1e-2,
                     seed: int = 0, expected: int = 0) -> tuple[int, EigenResult]:
    """Neumann zero-mode count (the deflation dimension) with its spectrum."""
    k = k or expected + 4
    res = solve_second_order("neumann", disc, k=k, seed=seed)
    return count_zero_modes(res.eigenvalues, tol), res


def first_positive(res: EigenResult, tol: float = 1e-2) -> tuple[float, int]:
    """First eigenvalue above the zero block and the block size."""
    c = count_zero_modes(res.eigenvalues, tol)
    return float(res.eigenvalues[c]), c
