"""End-to-end checks of the weighted inequalities and eigenvalue estimates.

Every check first certifies its hypotheses numerically (sampled minima
with safety margins), then evaluates both sides and classifies the result:

* ``pass``: the inequality holds, up to ``tolerance`` for non-strict ones
  and with a margin above ``STRICT_FACTOR`` times the error estimate for
  strict ones;
* ``fail``: it does not;
* ``hypothesis-not-met``: a certified constant violates an assumption.
  Both sides are still reported but nothing is asserted.

Boundary integrals use the exact boundary quadrature of a volume mesh and
the analytic surface calculus of :mod:`reillylab.forms.surface`; spectral
quantities come from :mod:`reillylab.spectra`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import comb, factorial

import numpy as np

from .forms import algebra
from .forms import jets as J
from .forms import surface as S
from .forms.fields import AnalyticForm, WeightField, constant_form, constant_weight
from .forms.operators import LowerBound, operator_lower_bound
from .geometry.domain import Domain, boundary_sample_points
from .geometry.mesh import Mesh, build_mesh
from .geometry.quadrature import quadrature_rule
from .identities import _boundary_sums

PASS, FAIL, NOT_MET = "pass", "fail", "hypothesis-not-met"
STRICT_FACTOR = 3.0
HYP_SLACK = 1e-9        # rounding allowance for non-strict hypotheses (c_min >= required)
STABILITY = 0.5         # margins may change by less than this fraction on refinement
DEFAULT_LEVEL = 4


class UnsupportedCheckError(ValueError):
    """The requested (n, p) or domain is outside the scope of a check."""


@dataclass
class CheckOutcome:
    theorem: str
    case: dict
    hypotheses: dict
    lhs: float
    rhs: float
    margin: float
    verdict: str
    equality_gap: float
    error: float
    strict: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return _plain(asdict(self))


def _plain(obj):
    """JSON-friendly copy (numpy scalars and arrays to Python types)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def equality_gap(lhs: float, rhs: float) -> float:
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0 else abs(rhs - lhs) / scale


def decide(hyp_ok: bool, margin: float, error: float, strict: bool, tolerance: float = 0.0) -> str:
    """Verdict from the margin rhs - lhs and its error estimate."""
    if not hyp_ok:
        return NOT_MET
    if not np.isfinite(margin):
        return FAIL
    if strict:
        return PASS if margin > STRICT_FACTOR * error else FAIL
    return PASS if margin >= -max(tolerance, STRICT_FACTOR * error) else FAIL


def stable(m0: float, m1: float, error: float = 0.0) -> bool:
    """Stability gate: the margin moves by less than STABILITY of itself
    (margins inside the error band count as stable equalities)."""
    if max(abs(m0), abs(m1)) <= STRICT_FACTOR * error:
        return True
    return abs(m1 - m0) < STABILITY * abs(m0)


# ------------------------------------------------------------------ hypotheses

def boundary_lower_bound(values, domain: Domain, density: float = 0.05) -> LowerBound:
    """Certified infimum over the boundary of ``values(x, nu, S)``.

    Sampled at two spacings; the difference of the two minima plus a small
    absolute slack is subtracted from the finer one.
    """
    mins, count = [], 0
    for h in (2 * density, density):
        x = boundary_sample_points(domain, h * domain.scale)
        nu, _, Sm = domain.boundary_frames(x)
        mins.append(float(np.min(values(x, nu, Sm))))
        count += len(x)
    margin = abs(mins[0] - mins[1]) + 1e-12 * max(1.0, abs(mins[1]))
    return LowerBound(mins[1] - margin, mins[1], margin, count)


def sigma_values(Sm: np.ndarray, k: int) -> np.ndarray:
    """sigma_k: sum of the k smallest principal curvatures (0 for k = 0)."""
    if k == 0:
        return np.zeros(len(Sm))
    return np.cumsum(np.linalg.eigvalsh(Sm), axis=-1)[:, k - 1]


def normal_derivative(f: WeightField, x, nu) -> np.ndarray:
    return np.einsum("ni,ni->n", f.grad(x), nu)


def positivity_bound(domain: Domain, f: WeightField, k: int) -> LowerBound:
    """Certified inf over the boundary of sigma_k + f_nu."""
    return boundary_lower_bound(lambda x, nu, Sm: sigma_values(Sm, k) + normal_derivative(f, x, nu),
                                domain)


def sigma_bound(domain: Domain, k: int) -> LowerBound:
    """Certified sigma_k(dM) = inf over the boundary of sigma_k."""
    return boundary_lower_bound(lambda x, nu, Sm: sigma_values(Sm, k), domain)


def certify(lb: LowerBound, required: float, strict: bool = False) -> dict:
    """Hypothesis entry: ``c_min >= required`` (or ``> required`` when strict)."""
    if strict:
        ok = lb.c_min > required
    else:
        ok = lb.c_min >= required - HYP_SLACK * max(1.0, abs(required))
    return {"c_min": lb.c_min, "sampled_min": lb.sampled_min, "margin": lb.margin,
            "samples": lb.samples, "required": float(required),
            "relation": ">" if strict else ">=", "ok": bool(ok)}


def _all_ok(hyp: dict) -> bool:
    return all(v.get("ok", True) for v in hyp.values() if isinstance(v, dict))


def _weight(f: WeightField | None, n: int) -> WeightField:
    return constant_weight(n) if f is None else f


def _check_degree(n: int, p: int, allow_middle: bool = False) -> None:
    if not 1 <= p <= n - 1:
        raise UnsupportedCheckError(f"p = {p} must lie in 1..{n - 1}")
    if not allow_middle and 2 * p == n:
        raise UnsupportedCheckError("p = n/2 is excluded by the hypotheses")
    if n not in (2, 3):
        raise UnsupportedCheckError("only n = 2 and n = 3 are supported")


def _case(domain: Domain, f: WeightField, **extra) -> dict:
    out = {"domain": domain.describe(), "weight": f.describe()}
    out.update(extra)
    return out


# ------------------------------------------------------------------ boundary integrals

_QUAD_CACHE: dict = {}


def _quadrature(domain: Domain, m: int, q: int):
    key = (repr(domain.describe()), m, q)
    if key not in _QUAD_CACHE:
        if len(_QUAD_CACHE) > 16:
            _QUAD_CACHE.clear()
        _QUAD_CACHE[key] = quadrature_rule(build_mesh(domain, m), q)
    return _QUAD_CACHE[key]


def boundary_pair(domain: Domain, f: WeightField, fn, m: int = DEFAULT_LEVEL, q: int = 8,
                  refine: bool = True) -> dict:
    """Integrate the two boundary densities returned by ``fn(x, nu, E, S, Dnu)``.

    The error estimate is the change under a quadrature-order increase;
    with ``refine`` the margin is also recomputed on the refined mesh.
    """
    a = _boundary_sums(_quadrature(domain, m, q), f, fn, 2)
    b = _boundary_sums(_quadrature(domain, m, q + 2), f, fn, 2)
    scale = max(1.0, float(np.max(np.abs(b))))
    err = float(np.max(np.abs(b - a))) + 1e-12 * scale
    out = {"lhs": float(b[0]), "rhs": float(b[1]), "error": err, "level": m, "q": q + 2}
    if refine:
        c = _boundary_sums(_quadrature(domain, 2 * m, q + 2), f, fn, 2)
        out["refined_margin"] = float(c[1] - c[0])
        out["refined_lhs"], out["refined_rhs"] = float(c[0]), float(c[1])
    return out


def _integral_outcome(theorem, case, hyp, vals, strict, diagnostics=None) -> CheckOutcome:
    lhs, rhs, err = vals["lhs"], vals["rhs"], vals["error"]
    margin = rhs - lhs
    tol = 1e-8 * max(1.0, abs(lhs), abs(rhs))
    ok = _all_ok(hyp)
    verdict = decide(ok, margin, err, strict, tol)
    diag = {"level": vals["level"], "q": vals["q"]}
    if "refined_margin" in vals:
        diag["refined_margin"] = vals["refined_margin"]
        diag["stable"] = stable(margin, vals["refined_margin"], max(err, tol))
        if verdict == PASS and not diag["stable"]:
            verdict = FAIL
    diag.update(diagnostics or {})
    return CheckOutcome(theorem, case, hyp, lhs, rhs, margin, verdict, equality_gap(lhs, rhs),
                        err, strict, diag)


def _zero_form(n: int, p: int) -> AnalyticForm:
    return constant_form(n, tuple(range(p)), 0.0)


def _poincare_densities(alpha: AnalyticForm, f: WeightField, p: int, shift: float):
    """Pointwise <S^[p] w, w> and |delta_f w - shift alpha|^2 / (sigma_{n-p} + f_nu)
    for the exact boundary form w = d(iota^* alpha)."""
    n = alpha.n

    def fn(x, nu, E, Sm, Dnu):
        aj = alpha.jet(x, 2)
        wj = J.exterior_d(aj)
        w = S.pullback(wj.value, E, p)
        left = np.einsum("nA,nAB,nB->n", w, algebra.derivation_matrix(Sm, p), w)
        g = f.grad(x)
        dl = S.surface_codifferential_values(wj, nu, Dnu, E, g)
        if shift:
            dl = dl - shift * S.pullback(aj.value, E, p - 1)
        den = sigma_values(Sm, n - p) + np.einsum("ni,ni->n", g, nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            right = np.einsum("nA,nA->n", dl, dl) / den
        return left, right

    return fn


def _poincare_hypotheses(domain: Domain, f: WeightField, p: int, ric_required: float) -> dict:
    return {
        "ric_f": certify(operator_lower_bound("ric", f, domain, p), ric_required),
        "sigma_plus_fnu": certify(positivity_bound(domain, f, domain.n - p), 0.0, strict=True),
    }


def equality_relation(alpha: AnalyticForm, domain: Domain, f: WeightField, p: int,
                      m: int = DEFAULT_LEVEL, seed: int = 0) -> dict:
    """Harmonic-extension diagnostic of the equality case.

    Extends w = d(iota^* alpha) and compares, at the boundary nodes,
    delta_f^dM w with -(sigma_{n-p} + f_nu) nu -| w_hat.
    """
    from .spectra.extension import harmonic_extension

    mesh = build_mesh(domain, m)
    ext = harmonic_extension(alpha, mesh, f, p, seed=seed)
    x = ext.nodes.coords[ext.nodes.boundary]
    nu, E, Sm = domain.boundary_frames(x)
    _, Dnu = domain.normal_and_jacobian(x)
    wj = J.exterior_d(alpha.jet(x, 2))
    g = f.grad(x)
    dl = S.surface_codifferential_values(wj, nu, Dnu, E, g)
    factor = sigma_values(Sm, domain.n - p) + np.einsum("ni,ni->n", g, nu)
    other = -factor[:, None] * ext.normal_part()
    scale = max(float(np.max(np.abs(dl))), 1e-300)
    return {"relation_residual": float(np.max(np.abs(dl - other))) / scale,
            "extension_energy": ext.energy, "extension_d_norm": ext.d_norm,
            "extension_delta_norm": ext.delta_norm, "kernel_dim": ext.kernel_dim}


def poincare_check(domain: Domain, f: WeightField | None, p: int, alpha: AnalyticForm,
                   m: int = DEFAULT_LEVEL, q: int = 8, refine: bool = True,
                   extension: bool = False) -> CheckOutcome:
    """int <S^[p] w, w> <= int |delta_f^dM w|^2 / (sigma_{n-p} + f_nu) for w = d^dM alpha."""
    n = domain.n
    _check_degree(n, p)
    f = _weight(f, n)
    if alpha.p != p - 1 or alpha.n != n:
        raise UnsupportedCheckError("alpha must be a (p-1)-form on the ambient space")
    hyp = _poincare_hypotheses(domain, f, p, 0.0)
    vals = boundary_pair(domain, f, _poincare_densities(alpha, f, p, 0.0), m, q, refine)
    diag = equality_relation(alpha, domain, f, p, m) if extension and _all_ok(hyp) else {}
    return _integral_outcome("poincare", _case(domain, f, p=p, alpha=alpha.describe()), hyp, vals,
                             False, diag)


def poincare_general_check(domain: Domain, f: WeightField | None, p: int, c: float,
                           alpha: AnalyticForm | None, m: int = DEFAULT_LEVEL, q: int = 8,
                           refine: bool = True) -> CheckOutcome:
    """int <S^[p] w, w> <= int |delta_f^dM w - (c p(n-p)/2) alpha|^2 / (sigma_{n-p} + f_nu),
    strict unless alpha = 0, under ric_f^(p) >= c p(n-p)."""
    n = domain.n
    _check_degree(n, p)
    f = _weight(f, n)
    zero = alpha is None
    alpha = _zero_form(n, p - 1) if zero else alpha
    if alpha.p != p - 1 or alpha.n != n:
        raise UnsupportedCheckError("alpha must be a (p-1)-form on the ambient space")
    k = c * p * (n - p)
    hyp = _poincare_hypotheses(domain, f, p, k)
    vals = boundary_pair(domain, f, _poincare_densities(alpha, f, p, k / 2), m, q, refine)
    strict = not zero and vals["rhs"] != 0.0
    return _integral_outcome("poincare_general", _case(domain, f, p=p, c=c, alpha=alpha.describe(),
                                                       zero_alpha=zero), hyp, vals, strict)


# ------------------------------------------------------------------ mean curvature

def _scal(Sm: np.ndarray) -> np.ndarray:
    tr = np.trace(Sm, axis1=1, axis2=2)
    return tr ** 2 - np.einsum("nab,nba->n", Sm, Sm)


def immersion_bracket(Sm, grad_f, nu, n: int, p: int, H0sq=None) -> np.ndarray:
    """(n-1)|H_0|^2 - (p-1) scal / ((n-1)(n-2)) + |d^dM f|^2 / (n-1) pointwise.

    ``H0sq`` defaults to H^2, the inclusion of the boundary in R^n.
    """
    H = np.trace(Sm, axis1=1, axis2=2) / (n - 1)
    H0sq = H ** 2 if H0sq is None else H0sq
    out = (n - 1) * H0sq
    if p > 1:
        out = out - (p - 1) / ((n - 1) * (n - 2)) * _scal(Sm)
    fn = np.einsum("ni,ni->n", grad_f, nu)
    tang = np.einsum("ni,ni->n", grad_f, grad_f) - fn ** 2
    return out + tang / (n - 1)


def immersion_sums(domain: Domain, f: WeightField | None, p: int, x) -> dict:
    """Pointwise sums over the coordinate forms w_I = iota^* dx_I.

    Each sum runs over increasing I and is multiplied by p! to give the sum
    over ordered p-tuples (permutations only change signs).  Returns the
    residuals of

      sum_I <S^[p] w_I, w_I>          = p! C(n-1, p) p H,
      sum_I |delta_f^dM w_I|^2        = p! C(n-1, p) p * bracket,
      sum_I <delta^dM w_I, grad^dM f -| w_I> = 0.
    """
    n = domain.n
    f = _weight(f, n)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    domain.check_on_boundary(x)
    nu, E, Sm = domain.boundary_frames(x)
    _, Dnu = domain.normal_and_jacobian(x)
    g = f.grad(x)
    gt = np.einsum("nia,ni->na", E, g)          # tangential gradient in the frame
    Sp = algebra.derivation_matrix(Sm, p)
    weing = np.zeros(len(x))
    deltaf = np.zeros(len(x))
    cross = np.zeros(len(x))
    for I in algebra.multi_indices(n, p):
        wj = constant_form(n, I).jet(x, 1)
        w = S.pullback(wj.value, E, p)
        weing += np.einsum("nA,nAB,nB->n", w, Sp, w)
        d0 = S.surface_codifferential_values(wj, nu, Dnu, E)
        df = S.surface_codifferential_values(wj, nu, Dnu, E, g)
        deltaf += np.einsum("nA,nA->n", df, df)
        cross += np.einsum("nA,nA->n", d0, algebra.interior(gt, w, n - 1, p))
    pf = factorial(p)
    const = pf * comb(n - 1, p) * p
    H = np.trace(Sm, axis1=1, axis2=2) / (n - 1)
    wclosed = const * H
    dclosed = const * immersion_bracket(Sm, g, nu, n, p)
    return {
        "weingarten": pf * weing, "weingarten_closed": wclosed,
        "weingarten_residual": float(np.max(np.abs(pf * weing - wclosed))),
        "delta_f": pf * deltaf, "delta_f_closed": dclosed,
        "delta_f_residual": float(np.max(np.abs(pf * deltaf - dclosed))),
        "cross": pf * cross, "cross_residual": float(np.max(np.abs(pf * cross))),
    }


def _mean_curvature_densities(f: WeightField, n: int, p: int, extra=None):
    """H and bracket / (sigma_{n-p} + f_nu); ``extra(x, Sm)`` returns
    (|H_0|^2, additive constant) for immersions other than the inclusion."""

    def fn(x, nu, E, Sm, Dnu):
        g = f.grad(x)
        H = np.trace(Sm, axis1=1, axis2=2) / (n - 1)
        H0sq, add = (None, 0.0) if extra is None else extra(x, Sm)
        num = immersion_bracket(Sm, g, nu, n, p, H0sq) + add
        den = sigma_values(Sm, n - p) + np.einsum("ni,ni->n", g, nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            return H, num / den

    return fn


def _sample_boundary(domain: Domain, count: int = 64) -> np.ndarray:
    x = boundary_sample_points(domain, domain.scale * np.sqrt(4 * np.pi / count))
    return x[:count] if len(x) >= count else x


def mean_curvature_euclidean_check(domain: Domain, f: WeightField | None, p: int,
                                   m: int = DEFAULT_LEVEL, q: int = 8,
                                   refine: bool = True) -> CheckOutcome:
    """int H dmu_f <= int bracket / (sigma_{n-p} + f_nu) dmu_f for the inclusion
    of the boundary in R^n, plus the pointwise summation identities."""
    n = domain.n
    _check_degree(n, p)
    if n < 3:
        raise UnsupportedCheckError("the scalar-curvature term needs n >= 3")
    f = _weight(f, n)
    hyp = _poincare_hypotheses(domain, f, p, 0.0)
    vals = boundary_pair(domain, f, _mean_curvature_densities(f, n, p), m, q, refine)
    sums = immersion_sums(domain, f, p, _sample_boundary(domain))
    diag = {k: v for k, v in sums.items() if k.endswith("residual")}
    return _integral_outcome("mean_curvature_euclidean", _case(domain, f, p=p), hyp, vals,
                             False, diag)


def sphere_constant(c: float, n: int, p: int) -> float:
    """Additive curvature term c (p - 1 + p(n - p)/4) of the spherical bound."""
    return c * (p - 1 + p * (n - p) / 4)


def mean_curvature_sphere_check(domain: Domain, f: WeightField | None, p: int, c: float,
                                m: int = DEFAULT_LEVEL, q: int = 8,
                                refine: bool = True) -> CheckOutcome:
    """Strict inequality for a round boundary immersed in the sphere of
    curvature c, where |H_0|^2 = 1/R^2 - c."""
    n = domain.n
    _check_degree(n, p)
    if n < 3:
        raise UnsupportedCheckError("the scalar-curvature term needs n >= 3")
    if domain.kind != "ball":
        raise UnsupportedCheckError("the spherical immersion is only available for round balls")
    if not c > 0:
        raise UnsupportedCheckError("c must be positive")
    f = _weight(f, n)
    R = domain.params["R"]
    H0sq = 1.0 / R ** 2 - c
    hyp = _poincare_hypotheses(domain, f, p, c * p * (n - p))
    hyp["immersion"] = {"H0_squared": H0sq, "required": 0.0, "relation": ">=", "ok": H0sq >= 0.0}
    add = sphere_constant(c, n, p)
    fn = _mean_curvature_densities(f, n, p, lambda x, Sm: (np.full(len(x), H0sq), add))
    vals = boundary_pair(domain, f, fn, m, q, refine)
    return _integral_outcome("mean_curvature_sphere", _case(domain, f, p=p, c=c), hyp, vals, True,
                             {"curvature_term": add})


# ------------------------------------------------------------------ spectra

class SpectralSet:
    """First eigenvalues of the interior problems on one mesh, computed lazily."""

    def __init__(self, mesh: Mesh, f: WeightField | None, seed: int = 0):
        self.mesh, self.f, self.seed = mesh, _weight(f, mesh.n), seed
        self._disc: dict = {}
        self._cache: dict = {}

    def disc(self, p: int):
        from .spectra.problems import discretize
        if p not in self._disc:
            self._disc[p] = discretize(self.mesh, self.f, p)
        return self._disc[p]

    def first(self, problem: str, p: int) -> dict:
        """{'value', 'residual', 'zero_modes'} of the first (positive) eigenvalue."""
        from .spectra.problems import (betti_zero_count, first_positive, solve_fourth_order,
                                       solve_second_order)
        key = (problem, p)
        if key not in self._cache:
            if problem == "neumann":
                _, res = betti_zero_count(self.disc(p), k=6, seed=self.seed)
                val, zero = first_positive(res)
            elif problem == "dirichlet":
                res = solve_second_order(problem, self.disc(p), k=2, seed=self.seed)
                val, zero = float(res.eigenvalues[0]), 0
            else:
                res = solve_fourth_order(problem, self.disc(p), k=2, seed=self.seed)
                val, zero = float(res.eigenvalues[0]), 0
            self._cache[key] = {"value": val, "residual": float(res.residuals[zero]),
                                "zero_modes": int(zero)}
        return self._cache[key]

    def value(self, problem: str, p: int) -> float:
        return self.first(problem, p)["value"]


def _levels(mesh: Mesh, f, seed: int, refine: bool):
    coarse = SpectralSet(mesh, f, seed)
    fine = SpectralSet(mesh.refine(), f, seed) if refine else None
    return coarse, fine


def _eigen_error(coarse: SpectralSet, fine: SpectralSet | None, problem: str, p: int) -> float:
    a = coarse.first(problem, p)
    err = a["residual"] * max(1.0, abs(a["value"]))
    if fine is not None:
        err += abs(fine.value(problem, p) - a["value"])
    return err


def boundary_eigen_bound_check(domain: Domain, f: WeightField | None, p: int = 1,
                               c: float | None = None, m: int = DEFAULT_LEVEL, seed: int = 0,
                               refine: bool = True) -> CheckOutcome:
    """lambda'_{1,p,f} >= C_p = sigma_p(dM) inf(sigma_{n-p} + f_nu); with c > 0 the
    eigenvalue is also checked to avoid the excluded interval."""
    from .spectra.boundary import boundary_function_spectrum

    n = domain.n
    _check_degree(n, p)
    if p != 1:
        raise UnsupportedCheckError("only exact 1-forms (differentials of functions) are supported")
    f = _weight(f, n)
    sp_lb = sigma_bound(domain, p)
    pos_lb = positivity_bound(domain, f, n - p)
    hyp = {
        "ric_f": certify(operator_lower_bound("ric", f, domain, p), 0.0),
        "sigma_p": certify(sp_lb, 0.0, strict=True),
        "sigma_plus_fnu": certify(pos_lb, 0.0, strict=True),
    }
    Cp = sp_lb.c_min * pos_lb.c_min
    mesh = build_mesh(domain, m)
    res = boundary_function_spectrum(mesh, f, k=6, seed=seed)
    lam = res.meta["positive"][0]
    err = float(res.residuals[res.meta["zero_modes"]]) * max(1.0, lam)
    diag = {"level": m, "C_p": Cp, "zero_modes": res.meta["zero_modes"],
            "spectrum": res.meta["positive"]}
    if refine:
        fine = boundary_function_spectrum(mesh.refine(), f, k=6, seed=seed)
        lam_f = fine.meta["positive"][0]
        err += abs(lam_f - lam)
        diag["refined_value"] = lam_f
    margin = lam - Cp
    tol = 1e-8 * max(1.0, lam)
    verdict = decide(_all_ok(hyp), margin, err, False, tol)
    if refine:
        diag["refined_margin"] = diag["refined_value"] - Cp
        diag["stable"] = stable(margin, diag["refined_margin"], max(err, tol))
    if c is not None:
        k = c * p * (n - p)
        hyp["ric_f_c"] = certify(operator_lower_bound("ric", f, domain, p), k)
        root = np.sqrt(Cp ** 2 + 2 * k * Cp) if Cp > 0 else 0.0
        lo, hi = (Cp + k - root) / 2, (Cp + k + root) / 2
        dist = max(lo - lam, lam - hi)
        diag.update({"c": c, "interval": [lo, hi], "interval_distance": dist,
                     "excluded": bool(dist > STRICT_FACTOR * err)})
        if _all_ok(hyp) and verdict == PASS and not diag["excluded"]:
            verdict = FAIL
        verdict = NOT_MET if not _all_ok(hyp) else verdict
    return CheckOutcome("boundary_eigen_bound", _case(domain, f, p=p, c=c), hyp, Cp, lam, margin,
                        verdict, equality_gap(Cp, lam), err, False, diag)


def _bound_denominator(p: int, N: float) -> float:
    return max(p / (p + 1), (N - 1) / N)


def eigenvalue_lower_bound_check(kind: str, domain: Domain, f: WeightField | None, p: int,
                                 N: float, m: int = DEFAULT_LEVEL, seed: int = 0,
                                 refine: bool = True, spectra=None) -> CheckOutcome:
    """First eigenvalue of ``kind`` against c p(n-p) / max(p/(p+1), (N-1)/N)
    (squared for the clamped plate), with c certified from ric_{N,f}^(p)."""
    if kind not in ("dirichlet", "neumann", "buckling", "clamped"):
        raise ValueError(f"unknown problem {kind!r}")
    n = domain.n
    _check_degree(n, p, allow_middle=True)
    f = _weight(f, n)
    lb = operator_lower_bound("ricN", f, domain, p, N)
    hyp = {"ric_N_f": certify(lb, 0.0)}
    vacuous = lb.c_min <= HYP_SLACK
    base = 0.0 if vacuous else lb.c_min / _bound_denominator(p, N)
    bound = base ** 2 if kind == "clamped" else base
    strict = not vacuous
    if kind == "neumann":
        sp_lb = sigma_bound(domain, p)
        hyp["sigma_p"] = certify(sp_lb, 0.0)
        strict = strict and sp_lb.c_min > 0
    coarse, fine = spectra or _levels(build_mesh(domain, m), f, seed, refine)
    lam = coarse.value(kind, p)
    err = _eigen_error(coarse, fine, kind, p)
    margin = lam - bound
    verdict = decide(_all_ok(hyp), margin, err, strict, 1e-8 * max(1.0, lam))
    diag = {"level": coarse.mesh.level, "bound_base": base, "vacuous": bool(vacuous), "N": N,
            "c_p_n_p": lb.c_min, "zero_modes": coarse.first(kind, p)["zero_modes"]}
    if fine is not None:
        diag["refined_margin"] = fine.value(kind, p) - bound
        diag["stable"] = stable(margin, diag["refined_margin"], err)
        if verdict == PASS and not diag["stable"]:
            verdict = FAIL
    return CheckOutcome(f"eigenvalue_lower_bound:{kind}", _case(domain, f, p=p, N=N), hyp, bound,
                        lam, margin, verdict, equality_gap(bound, lam), err, strict, diag)


# ------------------------------------------------------------------ ordering and kernels

ORDERING_TOL = 1e-8      # items 1-3: exact at matrix level up to solver residuals
DISCRETIZATION_TOL = 0.02  # items 4-6


def _ordering_items(sp: SpectralSet, p: int) -> list:
    """(item, lhs, rhs, residual scale, kind, extra) for every applicable item."""
    n = sp.mesh.n
    lam, Lam, Gam = (sp.value(k, p) for k in ("dirichlet", "buckling", "clamped"))
    res = max(sp.first(k, p)["residual"] for k in ("dirichlet", "buckling", "clamped"))
    items = [
        ("1", Gam, Lam ** 2, res, "exact", {}),
        ("2", lam * Lam, Gam, res, "exact", {}),
        ("3", lam, Lam, res, "exact", {"sqrt_gamma": float(np.sqrt(Gam)),
                                       "margin_low": float(np.sqrt(Gam) - lam),
                                       "margin_high": float(Lam - np.sqrt(Gam))}),
    ]
    if 1 <= p <= n - 1:
        items.append(("4", min(sp.value("dirichlet", p + 1), sp.value("dirichlet", p - 1)), Lam,
                      0.0, "discrete", {}))
    if p == 0:
        items.append(("5", sp.value("dirichlet", 1), Lam, 0.0, "discrete", {}))
    if p == n:
        items.append(("5", sp.value("dirichlet", n - 1), Lam, 0.0, "discrete", {}))
    nz = sp.first("neumann", p)
    items.append(("6", nz["value"], Lam, 0.0, "discrete", {"zero_modes": nz["zero_modes"]}))
    return items


def _item_margin(item, lhs, rhs, extra) -> float:
    if item == "3":
        return min(extra["margin_low"], extra["margin_high"])
    return rhs - lhs


def ordering_check(mesh: Mesh, f: WeightField | None, p: int, seed: int = 0,
                   refine: bool = True) -> list[CheckOutcome]:
    """Orderings between the first Dirichlet, Neumann, buckling and clamped
    eigenvalues.  Items 1-3 hold exactly for the discrete problems (same
    constrained space); items 4-6 are compared within DISCRETIZATION_TOL on
    the mesh and on its refinement."""
    f = _weight(f, mesh.n)
    coarse, fine = _levels(mesh, f, seed, refine)
    fine_items = {}
    out = []
    for item, lhs, rhs, res, kind, extra in _ordering_items(coarse, p):
        margin = _item_margin(item, lhs, rhs, extra)
        scale = max(1.0, abs(lhs), abs(rhs))
        diag = dict(extra, level=mesh.level, kind=kind)
        strict = False
        if kind == "exact":
            err = res * scale
            verdict = decide(True, margin, err, False, ORDERING_TOL * scale)
        else:
            err = 0.0
            if fine is not None:
                if not fine_items:
                    fine_items = {it[0]: it for it in _ordering_items(fine, p)}
                _, fl, fr, _, _, fx = fine_items[item]
                fm = _item_margin(item, fl, fr, fx)
                err = abs(fm - margin)
                diag.update(refined_margin=fm, refined_lhs=fl, refined_rhs=fr)
            tol = DISCRETIZATION_TOL * scale
            strict = item == "6" and extra["zero_modes"] == 0
            verdict = decide(True, margin, err, strict, tol)
            if fine is not None:
                fine_ok = decide(True, diag["refined_margin"], err, strict, tol) == PASS
                diag["stable"] = fine_ok and stable(margin, diag["refined_margin"], err)
                if verdict == PASS and not diag["stable"]:
                    verdict = FAIL
        out.append(CheckOutcome(f"ordering:{item}", _case(mesh.domain, f, p=p), {}, lhs, rhs,
                                margin, verdict, equality_gap(lhs, rhs), err, strict, diag))
    return out


def betti_number(domain: Domain, p: int) -> int:
    """Betti numbers of the supported domains (balls, ellipsoids, shells)."""
    n = domain.n
    if p == 0:
        return 1
    if domain.kind == "annulus" and p == n - 1:
        return 1
    return 0


GAP_THRESHOLD = 0.1


def kernel_checks(domain: Domain, weights, p: int, m: int = DEFAULT_LEVEL,
                  seed: int = 0) -> list[CheckOutcome]:
    """No Dirichlet kernel, Neumann zero modes equal to the Betti number for
    every weight, and (n = 3) a trivial relative kernel when the vanishing
    hypotheses are certified."""
    from .spectra.extension import relative_kernel

    weights = [weights] if isinstance(weights, WeightField) or weights is None else list(weights)
    mesh = build_mesh(domain, m)
    b = betti_number(domain, p)
    out, counts = [], []
    for f in weights:
        f = _weight(f, domain.n)
        sp = SpectralSet(mesh, f, seed)
        case = _case(domain, f, p=p)
        lam = sp.value("dirichlet", p)
        out.append(CheckOutcome("kernel:dirichlet", case, {}, GAP_THRESHOLD, lam,
                                lam - GAP_THRESHOLD, PASS if lam > GAP_THRESHOLD else FAIL,
                                equality_gap(GAP_THRESHOLD, lam), 0.0, True, {"level": m}))
        z = sp.first("neumann", p)["zero_modes"]
        counts.append(z)
        out.append(CheckOutcome("kernel:neumann_betti", case, {}, float(b), float(z), float(z - b),
                                PASS if z == b else FAIL, 0.0, 0.0, False,
                                {"level": m, "betti": b, "zero_modes": z}))
        if domain.n == 3 and 1 <= p <= domain.n - 1:
            hyp = {"ric_f": certify(operator_lower_bound("ric", f, domain, p), 0.0),
                   "sigma_plus_fnu": certify(positivity_bound(domain, f, domain.n - p), 0.0,
                                             strict=True)}
            if _all_ok(hyp):
                kdim, res = relative_kernel(mesh, f, p, seed=seed)
                out.append(CheckOutcome("kernel:relative", case, hyp, 0.0, float(kdim),
                                        float(-kdim), PASS if kdim == 0 else FAIL, 0.0, 0.0, False,
                                        {"level": m, "spectrum": [float(v) for v in res.eigenvalues]}))
    same = len(set(counts)) <= 1
    out.append(CheckOutcome("kernel:weight_independence", {"domain": domain.describe(), "p": p}, {},
                            float(min(counts, default=0)), float(max(counts, default=0)),
                            0.0 if same else -1.0, PASS if same else FAIL, 0.0, 0.0, False,
                            {"counts": counts}))
    return out
