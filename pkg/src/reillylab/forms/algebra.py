"""Pointwise exterior algebra on the coordinate basis dx_I of R^n.

A p-form value is stored as a coefficient vector over increasing
multi-indices I = (i_1 < ... < i_p), ordered as ``itertools.combinations``
enumerates them.  The basis dx_I is orthonormal, so the inner product of
two p-forms is the Euclidean dot product of their coefficient vectors.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np


class DegreeError(ValueError):
    """Raised when form degrees are incompatible with an operation."""


@lru_cache(maxsize=None)
def multi_indices(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    if p < 0 or p > n:
        return ()
    return tuple(combinations(range(n), p))


@lru_cache(maxsize=None)
def index_of(n: int, p: int) -> dict[tuple[int, ...], int]:
    return {I: k for k, I in enumerate(multi_indices(n, p))}


def dim(n: int, p: int) -> int:
    return comb(n, p) if 0 <= p <= n else 0


def _sort_sign(seq) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``seq`` (0 if entries repeat)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0, ()
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign, tuple(sorted(seq))


@lru_cache(maxsize=None)
def wedge_tensor(n: int, p: int, q: int) -> np.ndarray:
    """W[K, I, J] with (a ^ b)_K = sum W[K, I, J] a_I b_J."""
    W = np.zeros((dim(n, p + q), dim(n, p), dim(n, q)))
    if p + q > n:
        return W
    out = index_of(n, p + q)
    for a, I in enumerate(multi_indices(n, p)):
        for b, J in enumerate(multi_indices(n, q)):
            s, K = _sort_sign(I + J)
            if s:
                W[out[K], a, b] = s
    W.setflags(write=False)
    return W


@lru_cache(maxsize=None)
def interior_tensor(n: int, p: int) -> np.ndarray:
    """T[K, k, I] with (v -| w)_K = sum T[K, k, I] v_k w_I for a p-form w."""
    T = np.zeros((dim(n, p - 1), n, dim(n, p)))
    if p == 0:
        return T
    out = index_of(n, p - 1)
    for a, I in enumerate(multi_indices(n, p)):
        for m, k in enumerate(I):
            K = I[:m] + I[m + 1:]
            T[out[K], k, a] += (-1) ** m
    T.setflags(write=False)
    return T


@lru_cache(maxsize=None)
def d_tensor(n: int, p: int) -> np.ndarray:
    """G[J, k, I]: (dw)_J = sum G[J, k, I] d_k w_I."""
    # dw = sum_k dx_k ^ d_k w
    return wedge_tensor(n, 1, p)


@lru_cache(maxsize=None)
def star_matrix(n: int, p: int) -> np.ndarray:
    """Matrix of the Euclidean Hodge star from p-forms to (n-p)-forms."""
    S = np.zeros((dim(n, n - p), dim(n, p)))
    out = index_of(n, n - p)
    for a, I in enumerate(multi_indices(n, p)):
        Ic = tuple(i for i in range(n) if i not in I)
        s, _ = _sort_sign(I + Ic)
        S[out[Ic], a] = s
    S.setflags(write=False)
    return S


def wedge(a: np.ndarray, b: np.ndarray, n: int, p: int, q: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != dim(n, p) or b.shape[-1] != dim(n, q):
        raise DegreeError("coefficient length does not match degree")
    return np.einsum("KIJ,...I,...J->...K", wedge_tensor(n, p, q), a, b)


def interior(v: np.ndarray, w: np.ndarray, n: int, p: int) -> np.ndarray:
    if p < 1:
        raise DegreeError("interior product of a 0-form")
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != dim(n, p):
        raise DegreeError("coefficient length does not match degree")
    return np.einsum("KkI,...k,...I->...K", interior_tensor(n, p), v, w)


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise DegreeError("inner product of forms of different degree")
    return np.einsum("...I,...I->...", a, b)


def hodge_star(w: np.ndarray, n: int, p: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != dim(n, p):
        raise DegreeError("coefficient length does not match degree")
    return w @ star_matrix(n, p).T


def basis_form(n: int, I) -> np.ndarray:
    """Coefficient vector of dx_I (I need not be sorted)."""
    s, K = _sort_sign(tuple(I))
    w = np.zeros(dim(n, len(I)))
    if s:
        w[index_of(n, len(I))[K]] = s
    return w


def derivation_matrix(A: np.ndarray, p: int) -> np.ndarray:
    """Extension of a symmetric endomorphism A (in an orthonormal frame)
    to p-forms as a derivation: A^[p](a_1^...^a_p) = sum a_1^..^A a_j^..^a_p.

    ``A`` may carry leading batch axes.  A^[0] = 0 by convention.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[-1]
    C = dim(m, p)
    out = np.zeros(A.shape[:-2] + (C, C))
    if p == 0:
        return out
    idx = index_of(m, p)
    for a, I in enumerate(multi_indices(m, p)):
        for slot, i in enumerate(I):
            for j in range(m):
                s, K = _sort_sign(I[:slot] + (j,) + I[slot + 1:])
                if s:
                    # A^[1] dx_i = sum_j A[i, j] dx_j
                    out[..., idx[K], a] += s * A[..., i, j]
    return out


def compound_matrix(Q: np.ndarray, p: int) -> np.ndarray:
    """p-th compound: C[J, I] = det(Q[J, I]) over row set J, column set I.

    ``Q`` has shape (..., r, c); rows and columns are indexed by
    p-subsets of range(r) and range(c).
    """
    Q = np.asarray(Q, dtype=float)
    r, c = Q.shape[-2:]
    rows = multi_indices(r, p)
    cols = multi_indices(c, p)
    out = np.empty(Q.shape[:-2] + (len(rows), len(cols)))
    if p == 0:
        out[...] = 1.0
        return out
    for a, J in enumerate(rows):
        sub = Q[..., J, :]
        for b, I in enumerate(cols):
            out[..., a, b] = np.linalg.det(sub[..., :, I])
    return out
