"""Smallest eigenpairs of symmetric pencils A x = lambda B x.

The iterative solver is a block Lanczos process on the shift-inverted
operator (A - sigma B)^{-1} B with full B-reorthogonalization, followed by
Rayleigh-Ritz on the pencil itself.  Small problems can be solved densely,
which also serves as the reference solver in tests.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-8
DENSE_LIMIT = 2000


class FactorizationError(RuntimeError):
    """A - shift * B could not be factorized; retry with another shift."""


class ConvergenceError(RuntimeError):
    pass


class GapDetectionError(RuntimeError):
    """No clear spectral gap separates numerically zero eigenvalues."""


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray = field(repr=False)
    residuals: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def to_dict(self, **extra) -> dict:
        out = dict(extra)
        out["eigenvalues"] = [float(v) for v in self.eigenvalues]
        out["residuals"] = [float(v) for v in self.residuals]
        out.update({k: v for k, v in self.meta.items() if k not in out and k != "timing"})
        return out


def _apply(A):
    if callable(A) and not sp.issparse(A) and not isinstance(A, np.ndarray):
        return A
    return lambda X: A @ X


def _dense(A, N: int) -> np.ndarray:
    if sp.issparse(A):
        return A.toarray()
    if isinstance(A, np.ndarray):
        return A
    return np.asarray(A(np.eye(N)))


def residuals(A, B, lam: np.ndarray, X: np.ndarray) -> np.ndarray:
    """||A x - lambda B x|| / (||B x|| max(1, |lambda|)) per column."""
    AX = _apply(A)(X)
    BX = B @ X
    R = AX - BX * lam[None, :]
    scale = np.linalg.norm(BX, axis=0) * np.maximum(1.0, np.abs(lam))
    return np.linalg.norm(R, axis=0) / scale


def normalize_signs(X: np.ndarray) -> np.ndarray:
    """Flip columns so that the entry of largest modulus is positive."""
    X = X.copy()
    idx = np.argmax(np.abs(X), axis=0)
    s = np.sign(X[idx, np.arange(X.shape[1])])
    s[s == 0] = 1.0
    return X * s[None, :]


def dense_eig(A, B, k: int) -> EigenResult:
    """Reference solver (LAPACK generalized symmetric eigensolver)."""
    N = B.shape[0]
    Ad, Bd = _dense(A, N), _dense(B, N)
    Ad = 0.5 * (Ad + Ad.T)
    Bd = 0.5 * (Bd + Bd.T)
    k = min(k, N)
    lam, X = la.eigh(Ad, Bd, subset_by_index=[0, k - 1])
    X = normalize_signs(X)
    return EigenResult(lam, X, residuals(A, B, lam, X), {"method": "dense", "dim": N})


def factorize(A, B, shift: float):
    """Sparse LU solve for A - shift B; raises FactorizationError."""
    S = (A - shift * B).tocsc() if shift else sp.csc_matrix(A)
    try:
        lu = spla.splu(S, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise FactorizationError(str(exc)) from exc
    return lu.solve


def _b_orthonormalize(W: np.ndarray, B, drop: float = 1e-14):
    """B-orthonormal basis of the columns of W, dropping dependent ones.

    Columns are scaled to unit B-norm first so that one dominant direction
    (e.g. a zero mode amplified by the shift-invert) cannot mask the rest.
    """
    BW = B @ W
    norms = np.sqrt(np.maximum(np.einsum("ij,ij->j", W, BW), 0.0))
    ok = norms > 0
    W, BW = W[:, ok] / norms[ok], BW[:, ok] / norms[ok]
    for _ in range(2):
        G = W.T @ BW
        ev, U = np.linalg.eigh(0.5 * (G + G.T))
        keep = ev > drop * max(ev.max(), 1e-300) if len(ev) else ev > 0
        U = U[:, keep] / np.sqrt(ev[keep])[None, :]
        W, BW = W @ U, BW @ U
    return W, BW


def lanczos(A, B, k: int, shift: float = 0.0, solve=None, seed: int = 0, block: int | None = None,
            tol: float = 1e-10, max_dim: int | None = None, floor: float = RESIDUAL_TOL) -> EigenResult:
    """Block shift-invert Lanczos with full B-reorthogonalization.

    Stops when every wanted residual is below ``tol``, or when they are all
    below ``floor`` and have stagnated (rounding level of the solves).
    """
    N = B.shape[0]
    k = min(k, N)
    b = min(N, block or min(max(k, 4), 12))
    max_dim = min(N, max_dim or max(40 * b, 30 * k, 300))
    applyA = _apply(A)
    if solve is None:
        if not sp.issparse(A):
            raise ValueError("an explicit solver is needed for operator-valued A")
        solve = factorize(A, B, shift)
    rng = np.random.default_rng(seed)
    V = np.zeros((N, 0))
    BV = np.zeros((N, 0))
    AV = np.zeros((N, 0))
    X, BX = _b_orthonormalize(rng.standard_normal((N, b)), B)
    steps = 0
    lam = res = Y = None
    history = []
    while True:
        V = np.hstack([V, X])
        BV = np.hstack([BV, BX])
        AV = np.hstack([AV, applyA(X)])
        steps += 1
        if V.shape[1] >= min(N, k + b):
            H = V.T @ AV
            G = V.T @ BV
            # generalized Ritz problem absorbs the slow loss of B-orthogonality
            theta, S = la.eigh(0.5 * (H + H.T), 0.5 * (G + G.T))
            Sk = S[:, :k]
            lam = theta[:k]
            R = AV @ Sk - (BV @ Sk) * lam[None, :]
            scale = np.linalg.norm(BV @ Sk, axis=0) * np.maximum(1.0, np.abs(lam))
            res = np.linalg.norm(R, axis=0) / scale
            history.append(float(np.max(res)))
            stalled = len(history) > 3 and history[-1] <= floor and history[-1] > 0.5 * history[-4]
            if np.all(res <= tol) or stalled or V.shape[1] >= N:
                Y = V @ Sk
                break
        if V.shape[1] >= max_dim:
            raise ConvergenceError(f"no convergence within subspace dimension {V.shape[1]} "
                                   f"(worst residual {float(np.max(res)) if res is not None else float('nan'):.1e})")
        W = solve(BX)
        W = W.reshape(N, -1)
        for _ in range(2):
            W = W - V @ (BV.T @ W)
        X, BX = _b_orthonormalize(W, B)
        if X.shape[1] == 0 or np.linalg.norm(BV.T @ X) > 1e-6:
            # invariant subspace found: restart with fresh random directions
            W = rng.standard_normal((N, b))
            for _ in range(2):
                W = W - V @ (BV.T @ W)
            X, BX = _b_orthonormalize(W, B)
        X = X[:, : min(X.shape[1], N - V.shape[1])]
        BX = BX[:, : X.shape[1]]
    Y = normalize_signs(Y)
    final = residuals(A, B, lam, Y)
    meta = {"method": "lanczos", "shift": float(shift), "iterations": steps,
            "subspace": int(V.shape[1]), "block": b, "seed": seed, "dim": N}
    return EigenResult(lam, Y, final, meta)


def eig_small(A, B, k: int, shift: float = 0.0, solve=None, seed: int = 0,
              method: str = "lanczos", tol: float = RESIDUAL_TOL) -> EigenResult:
    """First k eigenpairs of A x = lambda B x (B positive definite).

    ``method`` is 'lanczos', 'dense' or 'auto' (dense up to DENSE_LIMIT).
    A non-converged Lanczos run falls back to the dense solver on small
    systems; otherwise the error propagates.
    """
    t0 = time.perf_counter()
    N = B.shape[0]
    if method == "dense" or (method == "auto" and N <= DENSE_LIMIT):
        out = dense_eig(A, B, k)
    elif method in ("lanczos", "auto"):
        try:
            out = lanczos(A, B, k, shift, solve, seed, tol=min(tol, 1e-10))
        except ConvergenceError:
            if N > DENSE_LIMIT:
                raise
            out = dense_eig(A, B, k)
            out.meta["fallback"] = "dense"
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.any(out.residuals > tol):
        raise ConvergenceError(f"residual {float(np.max(out.residuals)):.2e} above {tol:.0e}")
    out.meta["timing"] = time.perf_counter() - t0
    return out


def semidefinite_shift(A, B) -> float:
    """Small negative shift for pencils with a nontrivial kernel."""
    N = B.shape[0]
    trA = float(A.diagonal().sum()) if sp.issparse(A) else 1.0
    trB = float(B.diagonal().sum())
    return -1e-8 * trA / max(trB, 1e-300) if trA > 0 else -1e-8 * trB / N


def count_zero_modes(eigenvalues, tol: float = 1e-2, gray: float = 1e-3) -> int:
    """Number of eigenvalues below tol times the first eigenvalue above them.

    A GapDetectionError is raised when no eigenvalue is clearly positive,
    or when the first eigenvalue above the zero block is itself much
    smaller than the next one (neither clearly zero nor clearly positive).
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    k = len(lam)
    c = 0
    for j in range(1, k):
        if lam[j] > 0 and np.max(np.abs(lam[:j])) < tol * lam[j]:
            c = j
    if lam[c] <= 0 or (c == 0 and k == 1 and abs(lam[0]) < tol):
        raise GapDetectionError("no eigenvalue is clearly positive")
    if c > 0 and lam[c] < 10 * np.max(np.abs(lam[:c])):
        raise GapDetectionError("zero block is not separated by a 10x gap")
    if c + 1 < k and lam[c] < gray * lam[c + 1]:
        raise GapDetectionError(f"eigenvalue {lam[c]:.3e} is neither clearly zero nor positive")
    return c
