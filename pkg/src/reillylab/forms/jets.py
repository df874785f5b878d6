"""Derivative jets of form fields and the exterior calculus acting on them.

A jet of order k of a p-form field at N points is a list ``data`` with
``data[j]`` of shape (N,) + (n,)*j + (C,), C = C(n, p), holding all j-th
partial derivatives of the coefficients (derivative axes first, the
component axis last).  Vector fields use the same layout with C = n.
On flat domains the covariant derivative is the componentwise partial
derivative, so every operator below is exact algebra on jets.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from string import ascii_lowercase

import numpy as np

from . import algebra


class JetOrderError(ValueError):
    """Raised when an operator needs more derivatives than a jet carries."""


@dataclass
class FormJet:
    n: int
    p: int
    data: list

    @property
    def order(self) -> int:
        return len(self.data) - 1

    @property
    def value(self) -> np.ndarray:
        return self.data[0]

    def truncate(self, k: int) -> "FormJet":
        return FormJet(self.n, self.p, self.data[: k + 1])

    def need(self, k: int) -> None:
        if self.order < k:
            raise JetOrderError(f"operator needs jets of order {k}, have {self.order}")

    def __add__(self, other: "FormJet") -> "FormJet":
        if (self.n, self.p) != (other.n, other.p):
            raise algebra.DegreeError("adding forms of different degree")
        k = min(self.order, other.order)
        return FormJet(self.n, self.p, [a + b for a, b in zip(self.data[: k + 1], other.data[: k + 1])])

    def __sub__(self, other: "FormJet") -> "FormJet":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "FormJet":
        return FormJet(self.n, self.p, [c * a for a in self.data])


def zero_jet(n: int, p: int, npts: int, order: int) -> FormJet:
    C = algebra.dim(n, p)
    return FormJet(n, p, [np.zeros((npts,) + (n,) * j + (C,)) for j in range(order + 1)])


def gradient_field(fjet: FormJet) -> np.ndarray:
    """Jet list of the vector field grad f from a scalar jet of f."""
    # V[j][..., a_1..a_j, k] = d_k d_a f
    return [fjet.data[j + 1][..., 0] for j in range(fjet.order)]


def _contract_derivative(data_next: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    # contract the last derivative axis (k) and the component axis (I)
    Jn = tensor.shape[0]
    flat = data_next.reshape(data_next.shape[:-2] + (-1,))
    return flat @ tensor.reshape(Jn, -1).T


def exterior_d(w: FormJet) -> FormJet:
    w.need(1)
    G = algebra.d_tensor(w.n, w.p)
    return FormJet(w.n, w.p + 1, [_contract_derivative(w.data[j + 1], G) for j in range(w.order)])


def codifferential(w: FormJet) -> FormJet:
    """delta w = -sum_k e_k -| d_k w (divergence is -delta on 1-forms)."""
    w.need(1)
    if w.p == 0:
        return zero_jet(w.n, 0, w.data[0].shape[0], w.order - 1)
    T = algebra.interior_tensor(w.n, w.p)
    return FormJet(w.n, w.p - 1, [-_contract_derivative(w.data[j + 1], T) for j in range(w.order)])


def _leibniz(A: list, B: list, tensor: np.ndarray, order: int) -> list:
    """Jets of the bilinear product R_r = tensor[r, a, b] A_a B_b."""
    out = []
    letters = ascii_lowercase[:order]
    for j in range(order + 1):
        axes = letters[:j]
        acc = 0.0
        for s in range(j + 1):
            for S in combinations(range(j), s):
                Sa = "".join(axes[i] for i in S)
                Sb = "".join(axes[i] for i in range(j) if i not in S)
                spec = f"rAB,Z{Sa}A,Z{Sb}B->Z{axes}r"
                acc = acc + np.einsum(spec, tensor, A[s], B[j - s], optimize=True)
        out.append(acc)
    return out


def interior_field(V: list, w: FormJet) -> FormJet:
    """Jet of X -| w for a vector field jet list V."""
    if w.p == 0:
        return zero_jet(w.n, 0, w.data[0].shape[0], min(w.order, len(V) - 1))
    k = min(w.order, len(V) - 1)
    T = algebra.interior_tensor(w.n, w.p)
    return FormJet(w.n, w.p - 1, _leibniz(V, w.data, T, k))


def wedge_jets(a: FormJet, b: FormJet) -> FormJet:
    k = min(a.order, b.order)
    W = algebra.wedge_tensor(a.n, a.p, b.p)
    return FormJet(a.n, a.p + b.p, _leibniz(a.data, b.data, W, k))


def scalar_times(u: FormJet, w: FormJet) -> FormJet:
    """Jet of u w for a scalar jet u."""
    return wedge_jets(u, w)


def weighted_codifferential(w: FormJet, fjet: FormJet) -> FormJet:
    """delta_f w = delta w + grad f -| w."""
    dw = codifferential(w)
    if w.p == 0:
        return dw
    return dw + interior_field(gradient_field(fjet), w)


def weighted_laplacian(w: FormJet, fjet: FormJet) -> FormJet:
    """Delta_f = d delta_f + delta_f d."""
    w.need(2)
    out = None
    if w.p > 0:
        out = exterior_d(weighted_codifferential(w, fjet))
    if w.p < w.n:
        t = weighted_codifferential(exterior_d(w), fjet)
        out = t if out is None else out + t
    if out is None:
        # p = 0 = n cannot happen for n >= 1
        raise algebra.DegreeError("empty form space")
    return out


def directional(V: list, w: FormJet) -> FormJet:
    """Jet of nabla_X w = X^k d_k w (componentwise on flat space)."""
    w.need(1)
    k = min(w.order - 1, len(V) - 1)
    C = w.data[0].shape[-1]
    n = w.n
    # treat d_k w as an (n*C)-channel field and contract k with X^k
    shifted = [w.data[j + 1].reshape(w.data[j + 1].shape[:-2] + (n * C,)) for j in range(k + 1)]
    eye = np.zeros((C, n, n * C))
    for c in range(C):
        for a in range(n):
            eye[c, a, a * C + c] = 1.0
    return FormJet(n, w.p, _leibniz(V, shifted, eye, k))


def rough_laplacian(w: FormJet) -> FormJet:
    """nabla* nabla w = -sum_k d_k d_k w."""
    w.need(2)
    return FormJet(w.n, w.p, [-np.einsum("...kkI->...I", w.data[j + 2]) for j in range(w.order - 1)])


def hessian_derivation_value(fjet: FormJet, w: FormJet) -> np.ndarray:
    """Pointwise (Hess f)^[p] w at order zero."""
    H = fjet.data[2][..., 0]
    D = algebra.derivation_matrix(H, w.p)
    return np.einsum("...JI,...I->...J", D, w.data[0])


def lie_derivative_value(V: list, w: FormJet) -> np.ndarray:
    """(L_X w) at order zero via the coordinate formula
    L_X w = X^k d_k w + (DX)^[p] w with DX[k, i] = d_i X^k."""
    w.need(1)
    dirv = np.einsum("...k,...kI->...I", V[0], w.data[1])
    if w.p == 0:
        return dirv
    DX = np.swapaxes(V[1], -1, -2)  # V[1][..., i, k] = d_i X^k
    D = algebra.derivation_matrix(DX, w.p)
    return dirv + np.einsum("...JI,...I->...J", D, w.data[0])
