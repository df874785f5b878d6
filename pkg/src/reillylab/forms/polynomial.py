"""Multivariate polynomials with several output channels and exact jets."""
from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np


@lru_cache(maxsize=None)
def monomial_exponents(n: int, degree: int) -> np.ndarray:
    """All exponent vectors of total degree <= ``degree``, graded order."""
    exps = [e for e in product(range(degree + 1), repeat=n) if sum(e) <= degree]
    exps.sort(key=lambda e: (sum(e), tuple(-v for v in e)))
    out = np.array(exps, dtype=int).reshape(-1, n)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _exponent_lookup(n: int, degree: int) -> dict:
    return {tuple(e): k for k, e in enumerate(monomial_exponents(n, degree))}


@lru_cache(maxsize=None)
def derivative_operator(n: int, degree: int, axes: tuple[int, ...]) -> np.ndarray:
    """Matrix D with coef(d/dx_axes P) = D @ coef(P) in the monomial basis."""
    exps = monomial_exponents(n, degree)
    look = _exponent_lookup(n, degree)
    M = len(exps)
    D = np.zeros((M, M))
    for col, e in enumerate(exps):
        e = list(e)
        c = 1.0
        for a in axes:
            if e[a] == 0:
                c = 0.0
                break
            c *= e[a]
            e[a] -= 1
        if c:
            D[look[tuple(e)], col] = c
    D.setflags(write=False)
    return D


@lru_cache(maxsize=None)
def _parents(n: int, degree: int):
    """For each monomial of positive degree: (index of e - e_i, i)."""
    exps = monomial_exponents(n, degree)
    look = _exponent_lookup(n, degree)
    out = []
    for e in exps[1:]:
        i = int(np.nonzero(e)[0][0])
        q = e.copy()
        q[i] -= 1
        out.append((look[tuple(q)], i))
    return tuple(out)


def monomials(x: np.ndarray, n: int, degree: int) -> np.ndarray:
    """Values of every monomial at points x (N, n) -> (N, M)."""
    x = np.asarray(x, dtype=float)
    M = len(monomial_exponents(n, degree))
    out = np.empty((x.shape[0], M), order="F")
    out[:, 0] = 1.0
    xt = [np.ascontiguousarray(x[:, i]) for i in range(n)]
    for k, (parent, i) in enumerate(_parents(n, degree), start=1):
        np.multiply(out[:, parent], xt[i], out=out[:, k])
    return out


class Polynomial:
    """Vector-valued polynomial sum_e coef[e, c] x^e on R^n."""

    def __init__(self, n: int, degree: int, coef: np.ndarray):
        coef = np.asarray(coef, dtype=float)
        M = len(monomial_exponents(n, degree))
        if coef.ndim == 1:
            coef = coef[:, None]
        if coef.shape[0] != M:
            raise ValueError(f"expected {M} monomial coefficients, got {coef.shape[0]}")
        if not np.all(np.isfinite(coef)):
            raise ValueError("non-finite polynomial coefficients")
        self.n = n
        self.degree = degree
        self.coef = coef
        self._jet_mats: dict[int, np.ndarray] = {}

    @classmethod
    def from_terms(cls, n: int, terms: dict, channels: int = 1) -> "Polynomial":
        """Build from ``{exponent tuple: value}``; a value may be a
        per-channel sequence of length ``channels``."""
        degree = max((sum(e) for e in terms), default=0)
        look = _exponent_lookup(n, degree)
        coef = np.zeros((len(look), channels))
        for e, val in terms.items():
            coef[look[tuple(e)]] += np.broadcast_to(np.asarray(val, dtype=float), (channels,))
        return cls(n, degree, coef)

    @property
    def channels(self) -> int:
        return self.coef.shape[1]

    def _jet_matrix(self, j: int) -> np.ndarray:
        # columns ordered as (axes tuple in C order, channel)
        if j not in self._jet_mats:
            blocks = [derivative_operator(self.n, self.degree, ax) @ self.coef
                      for ax in product(range(self.n), repeat=j)]
            self._jet_mats[j] = np.concatenate(blocks, axis=1)
        return self._jet_mats[j]

    def _stacked(self, order: int) -> np.ndarray:
        key = -1 - order
        if key not in self._jet_mats:
            self._jet_mats[key] = np.concatenate([self._jet_matrix(j) for j in range(order + 1)], axis=1)
        return self._jet_mats[key]

    def jets(self, x: np.ndarray, order: int) -> list[np.ndarray]:
        """[value (N,C), first (N,n,C), second (N,n,n,C), ...] up to ``order``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        N = x.shape[0]
        V = monomials(x, self.n, self.degree)
        big = self._stacked(order)
        vals = V @ big
        out, start = [], 0
        for j in range(order + 1):
            width = self.n ** j * self.channels
            out.append(vals[:, start:start + width].reshape((N,) + (self.n,) * j + (self.channels,)))
            start += width
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.jets(x, 0)[0]
