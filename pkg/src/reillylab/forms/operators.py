"""Pointwise evaluation API: exterior calculus, weighted operators,
curvature endomorphisms and boundary traces."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra
from . import jets as J
from .fields import AnalyticForm, WeightField


@dataclass
class FormValue:
    """Coefficients of a p-form over increasing multi-indices.

    ``coeffs`` has shape (C,) at a single point or (N, C) for a batch.
    """

    n: int
    p: int
    coeffs: np.ndarray
    flags: tuple = field(default=())

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape[-1] != algebra.dim(self.n, self.p):
            raise algebra.DegreeError("coefficient length must be C(n, p)")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite form coefficients")

    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.coeffs, axis=-1)


def _single(x) -> bool:
    return np.asarray(x).ndim == 1


def _wrap(n, p, arr, single, flags=()):
    return FormValue(n, p, arr[0] if single else arr, flags)


def pointwise_algebra(op: str, *args):
    """op in {wedge, interior_product, inner, hodge_star} on FormValues
    (interior_product takes a vector first)."""
    if op == "wedge":
        a, b = args
        if a.n != b.n:
            raise algebra.DegreeError("dimension mismatch")
        return FormValue(a.n, a.p + b.p, algebra.wedge(a.coeffs, b.coeffs, a.n, a.p, b.p))
    if op == "interior_product":
        v, w = args
        return FormValue(w.n, w.p - 1, algebra.interior(np.asarray(v, float), w.coeffs, w.n, w.p))
    if op == "inner":
        a, b = args
        if (a.n, a.p) != (b.n, b.p):
            raise algebra.DegreeError("inner product of forms of different degree")
        return algebra.inner(a.coeffs, b.coeffs)
    if op == "hodge_star":
        (w,) = args
        return FormValue(w.n, w.n - w.p, algebra.hodge_star(w.coeffs, w.n, w.p))
    raise ValueError(f"unknown algebra operation {op!r}")


def eval_d(form: AnalyticForm, x) -> FormValue:
    single = _single(x)
    jet = form.jet(x, 1)
    return _wrap(form.n, form.p + 1, J.exterior_d(jet).value, single)


def eval_delta(form: AnalyticForm, x) -> FormValue:
    return eval_delta_f(form, None, x)


def eval_delta_f(form: AnalyticForm, f: WeightField | None, x) -> FormValue:
    single = _single(x)
    if form.p == 0:
        npts = 1 if single else len(x)
        return _wrap(form.n, 0, np.zeros((npts, 1)), single, flags=("degree-0: zero by convention",))
    jet = form.jet(x, 1)
    if f is None:
        out = J.codifferential(jet)
    else:
        out = J.weighted_codifferential(jet, f.jet(x, 1))
    return _wrap(form.n, form.p - 1, out.value, single)


def eval_laplacian_f(form: AnalyticForm, f: WeightField, x, route: str = "exterior") -> FormValue:
    """Delta_f by d delta_f + delta_f d (route 'exterior') or by
    Delta + L_{grad f} with the coordinate Lie derivative (route 'lie')."""
    single = _single(x)
    jet = form.jet(x, 2)
    fjet = f.jet(x, 2)
    if route == "exterior":
        val = J.weighted_laplacian(jet, fjet).value
    elif route == "lie":
        flat = J.weighted_laplacian(jet, J.zero_jet(form.n, 0, jet.value.shape[0], 2)).value
        val = flat + J.lie_derivative_value(J.gradient_field(fjet), jet)
    else:
        raise ValueError(f"unknown route {route!r}")
    return _wrap(form.n, form.p, val, single)


def eval_gradient(form: AnalyticForm, x) -> np.ndarray:
    """Covariant derivative, shape (n, C) (or (N, n, C)); row k is d_k w."""
    single = _single(x)
    g = form.jet(x, 1).data[1]
    return g[0] if single else g


def gradient_norm_sq(form: AnalyticForm, x) -> np.ndarray:
    g = form.jet(x, 1).data[1]
    out = np.einsum("nkI,nkI->n", g, g)
    return out[0] if _single(x) else out


# ------------------------------------------------------------------ curvature

class ForbiddenParameterError(ValueError):
    pass


def curvature_matrix(variant: str, f: WeightField, x, p: int, N: float | None = None) -> np.ndarray:
    """Matrix (C, C) (or (M, C, C)) of T_f^[p], W^[p], ric_f^(p) or ric_{N,f}^(p)."""
    single = _single(x)
    x2 = np.atleast_2d(x)
    n = f.n
    C = algebra.dim(n, p)
    if variant == "W":
        out = np.zeros((len(x2), C, C))
    else:
        Hs = f.hessian(x2)
        out = algebra.derivation_matrix(Hs, p)
        if variant == "ricN":
            if N is None:
                raise ForbiddenParameterError("ric_{N,f} needs N")
            if 0 <= N <= n - p + 1:
                raise ForbiddenParameterError(f"N = {N} lies in the forbidden interval [0, {n - p + 1}]")
            if p >= 1:
                g = f.grad(x2)
                # df ^ (grad f -| w) as a matrix on p-forms
                inter = np.einsum("KkI,nk->nKI", algebra.interior_tensor(n, p), g)
                wed = np.einsum("JaK,na->nJK", algebra.wedge_tensor(n, 1, p - 1), g)
                out = out - np.einsum("nJK,nKI->nJI", wed, inter) / (N - (n - p + 1))
        elif variant not in ("T", "ric"):
            raise ValueError(f"unknown curvature variant {variant!r}")
    return out[0] if single else out


def curvature_endomorphism(variant: str, f: WeightField, x, p: int, N: float | None = None,
                           form: FormValue | None = None):
    """Apply the endomorphism to ``form`` if given, else return its matrix."""
    A = curvature_matrix(variant, f, x, p, N)
    if form is None:
        return A
    return FormValue(f.n, p, np.einsum("...JI,...I->...J", A, form.coeffs))


@dataclass
class LowerBound:
    c_min: float          # certified value (sampled minimum minus margin)
    sampled_min: float
    margin: float
    samples: int


def operator_lower_bound(variant: str, f: WeightField, domain, p: int, N: float | None = None,
                         density: float = 0.05) -> LowerBound:
    """Certified lower bound of the smallest eigenvalue of a curvature
    endomorphism over the closed domain.

    The minimum is sampled on grid and boundary points at two spacings; the
    difference between the two minima (plus a small absolute slack) is the
    safety margin subtracted from the fine minimum.
    """
    from ..geometry.domain import sample_points

    try:
        mins = []
        count = 0
        for h in (2 * density, density):
            pts = sample_points(domain, h * domain.scale)
            A = curvature_matrix(variant, f, pts, p, N)
            ev = np.linalg.eigvalsh(A) if A.shape[-1] else np.zeros((len(pts), 1))
            mins.append(float(np.min(ev)))
            count += len(pts)
    except ForbiddenParameterError:
        raise
    except Exception:
        return LowerBound(-np.inf, -np.inf, np.inf, 0)
    margin = abs(mins[0] - mins[1]) + 1e-12 * max(1.0, abs(mins[1]))
    return LowerBound(mins[1] - margin, mins[1], margin, count)


def weighted_mean_curvature(H, f_nu, n: int):
    """H_f = H + f_nu / (n - 1)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return np.asarray(H) + np.asarray(f_nu) / (n - 1)


# ------------------------------------------------------------------ traces

def frame_matrix(nu: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Orthogonal matrix with columns (nu, E) -- batched (N, n, n)."""
    return np.concatenate([nu[..., :, None], E], axis=-1)


def trace_coefficients(w: np.ndarray, nu: np.ndarray, E: np.ndarray, p: int):
    """Split form coefficients into (iota^* w, nu -| w) expressed in the
    boundary frame E: tangential components (C(n-1, p)) and normal part
    (C(n-1, p-1))."""
    n = nu.shape[-1]
    # (iota^* w)_A = sum_I det(E[I, A]) w_I
    tang = np.einsum("...IA,...I->...A", algebra.compound_matrix(E, p), w)
    if p == 0:
        return tang, np.zeros(w.shape[:-1] + (0,))
    nw = algebra.interior(nu, w, n, p)
    norm = np.einsum("...KB,...K->...B", algebra.compound_matrix(E, p - 1), nw)
    return tang, norm


def boundary_traces(form: AnalyticForm, domain, x):
    """(iota^* w, nu -| w) at boundary points, in the tangent frame."""
    single = _single(x)
    x2 = np.atleast_2d(x)
    domain.check_on_boundary(x2)
    nu, E, _ = domain.boundary_frames(x2)
    w = form(x2)
    tang, norm = trace_coefficients(w, nu, E, form.p)
    n = form.n
    t = FormValue(n - 1, form.p, tang[0] if single else tang)
    if form.p == 0:
        return t, None
    return t, FormValue(n - 1, form.p - 1, norm[0] if single else norm)
