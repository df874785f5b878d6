"""Execution of suite configurations: schema, check registry and case runner."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import identities as ident
from . import inequalities as ineq
from . import reports
from .forms.fields import (AnalyticForm, form_from_spec, polynomial, random_polynomial_form,
                           weight_from_spec)
from .geometry.domain import Domain, boundary_sample_points, build_domain
from .geometry.mesh import Mesh, build_mesh, generate_mesh
from .geometry.quadrature import quadrature_rule

IDENTITY_CHECKS = ("partial_integration", "green", "reilly", "volume",
                   "bochner", "boundary_formulas", "bf_duality")
SPECTRAL_CHECKS = ("dirichlet", "neumann", "buckling", "clamped", "boundary_spectrum", "betti",
                   "solver_equivalence")
INEQUALITY_CHECKS = ("poincare", "poincare_general", "boundary_eigen_bound",
                     "mean_curvature_euclidean", "mean_curvature_sphere", "ordering",
                     "eigenvalue_lower_bound", "kernel")
CHECK_NAMES = IDENTITY_CHECKS + SPECTRAL_CHECKS + INEQUALITY_CHECKS
CONVERGIBLE = ("partial_integration", "green", "reilly", "volume", "dirichlet", "neumann",
               "buckling", "clamped", "boundary_spectrum")

DEFAULT_TOLERANCES = {
    "integral": 1e-4,
    "pointwise": 1e-9,
    "oracle": 0.02,
    "solver_equivalence": 1e-8,
    "samples": 30,
}

_DOMAIN = {
    "type": "object", "required": ["kind", "n"], "additionalProperties": False,
    "properties": {"kind": {"enum": ["ball", "annulus", "ellipsoid"]},
                   "n": {"enum": [2, 3]}, "params": {"type": "object"}},
}
_WEIGHT = {
    "type": "object", "required": ["kind"],
    "properties": {"kind": {"enum": ["const", "linear", "quadratic", "gaussian", "polynomial"]}},
}
_CASE = {
    "type": "object", "required": ["name", "domain", "weight", "p", "checks"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "domain": _DOMAIN,
        "weight": _WEIGHT,
        "p": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0, "maximum": 3}},
        "checks": {"type": "array", "minItems": 1, "items": {"enum": list(CHECK_NAMES)}},
        "level": {"type": "integer", "minimum": 1},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "q": {"type": "integer", "minimum": 1, "maximum": 10},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "seed": {"type": "integer", "minimum": 0},
        "params": {"type": "object"},
    },
}
SCHEMA = {
    "type": "object", "required": ["suite", "seed", "cases"], "additionalProperties": False,
    "properties": {
        "suite": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "cases": {"type": "array", "items": _CASE},
    },
}


class ConfigError(ValueError):
    pass


def validate(config: dict) -> None:
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{'/'.join(str(s) for s in exc.absolute_path) or '<root>'}: {exc.message}") from exc
    names = [c["name"] for c in config["cases"]]
    if len(set(names)) != len(names):
        raise ConfigError("case names must be unique")


@dataclass
class Context:
    """Everything a check needs for one case."""

    name: str
    domain: Domain
    spec: dict
    seed: int
    level: int
    q: int
    tol: dict
    params: dict
    _weight: object = None
    _mesh: dict = field(default_factory=dict)

    @classmethod
    def from_case(cls, case: dict, suite_seed: int) -> "Context":
        d = case["domain"]
        domain = build_domain(d["kind"], d["n"], d.get("params"))
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(case.get("tolerances", {}))
        level = case.get("level", 4)
        ctx = cls(case["name"], domain, case, case.get("seed", suite_seed), level,
                  case.get("q", 8), tol, dict(case.get("params", {})))
        ctx._weight = weight_from_spec(case["weight"], domain.n)
        return ctx

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def weight(self):
        return self._weight

    def mesh(self, level: int | None = None) -> Mesh:
        level = self.level if level is None else level
        if level not in self._mesh:
            if "h" in self.spec and level == self.level:
                self._mesh[level] = generate_mesh(self.domain, self.spec["h"])
            else:
                self._mesh[level] = build_mesh(self.domain, level)
        return self._mesh[level]

    def rng(self, check: str, p) -> np.random.Generator:
        return np.random.default_rng([self.seed, CHECK_NAMES.index(check), -1 if p is None else p])


# ------------------------------------------------------------------ helpers

def _random_points(ctx: Context, rng, count: int, boundary: bool) -> np.ndarray:
    dom = ctx.domain
    if boundary:
        u = rng.standard_normal((count, dom.n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        if dom.kind == "annulus":
            r = np.where(rng.random(count) < 0.5, dom.params["R0"], dom.params["R1"])
            return u * r[:, None]
        if dom.kind == "ball":
            return u * dom.params["R"]
        return dom.project(u * dom.scale)
    pts = []
    while sum(len(p) for p in pts) < count:
        x = rng.uniform(-dom.scale, dom.scale, (4 * count, dom.n))
        pts.append(x[dom.contains(x, tol=-1e-3 * dom.scale)])
    return np.vstack(pts)[:count]


def _form(ctx: Context, check: str, p: int, key: str = "form", degree: int = 3) -> AnalyticForm:
    if key in ctx.params:
        return form_from_spec(ctx.params[key], ctx.n)
    return random_polynomial_form(ctx.n, p, degree, ctx.rng(check, p), name=f"random_p{p}")


def _alpha(ctx: Context, p: int) -> AnalyticForm:
    """Default boundary potential: x_1 for p = 1, x_1 dx_2 for p = 2."""
    if "alpha" in ctx.params:
        return form_from_spec(ctx.params["alpha"], ctx.n)
    expo = tuple(1 if i == 0 else 0 for i in range(ctx.n))
    I = tuple(range(1, p))
    return polynomial(ctx.n, p - 1, {(I, expo): 1.0}, name="x1" if p == 1 else "x1_dx2")


def _residual_record(ctx: Context, check: str, p, rep, tol: float) -> dict:
    verdict = "pass" if rep.rel_residual <= tol else "fail"
    return reports.record(ctx.name, check, "residual", rep.identity, rep.lhs, rep.rhs,
                          tol - rep.rel_residual, rep.rel_residual, verdict, p,
                          ineq._plain(rep.to_dict()))


def _outcome_record(ctx: Context, check: str, p, out: ineq.CheckOutcome) -> dict:
    return reports.record(ctx.name, check, "outcome", out.theorem, out.lhs, out.rhs, out.margin,
                          out.equality_gap, out.verdict, p, out.to_dict())


def _oracle(ctx: Context, key: str):
    spec = ctx.params.get("oracle", {}).get(key)
    if spec is None:
        return None, None
    if isinstance(spec, dict):
        return float(spec["value"]), float(spec.get("rel", ctx.tol["oracle"]))
    return float(spec), ctx.tol["oracle"]


# ------------------------------------------------------------------ identity checks

def _quad(ctx: Context, level: int | None = None):
    key = ("quad", ctx.level if level is None else level)
    if key not in ctx._mesh:
        ctx._mesh[key] = quadrature_rule(ctx.mesh(level), ctx.q)
    return ctx._mesh[key]


def _integral_report(ctx: Context, check: str, p: int, level: int | None = None):
    quad, f = _quad(ctx, level), ctx.weight
    if check == "partial_integration":
        if p + 1 > ctx.n:
            raise ineq.UnsupportedCheckError("partial integration needs p < n")
        alpha = _form(ctx, check, p)
        beta = _form(ctx, check, p + 1, key="form_beta")
        return ident.check_partial_integration(alpha, beta, quad, f)
    if check == "green":
        return ident.check_green(_form(ctx, check, p), quad, f)
    if check == "reilly":
        return ident.check_reilly(_form(ctx, check, p), quad, f)
    if check == "volume":
        vol = ident.integrate(lambda x: np.ones(len(x)), "interior", quad)
        return ident.ResidualReport.build("volume", vol, ctx.domain.volume(), quad.q, quad.mesh.h,
                                          {"domain": ctx.domain.describe()})
    raise KeyError(check)


def check_identity(ctx: Context, check: str, p: int) -> list:
    if check in ("partial_integration", "green", "reilly", "volume"):
        rep = _integral_report(ctx, check, p)
        return [_residual_record(ctx, check, p, rep, ctx.tol["integral"])]
    rng = ctx.rng(check, p)
    count = int(ctx.tol["samples"])
    omega = _form(ctx, check, p)
    tol = ctx.tol["pointwise"]
    if check == "bochner":
        x = _random_points(ctx, rng, count, boundary=False)
        reps = [ident.check_bochner(omega, x, ctx.weight)]
    elif check == "boundary_formulas":
        x = _random_points(ctx, rng, count, boundary=True)
        reps = ident.check_boundary_formulas(omega, ctx.domain, x, ctx.weight)
    else:
        x = _random_points(ctx, rng, count, boundary=True)
        reps = [ident.check_bf_duality(omega, ctx.domain, x, ctx.weight)]
    return [_residual_record(ctx, check, p, r, tol) for r in reps]


# ------------------------------------------------------------------ spectral checks

def _disc(ctx: Context, p: int, level: int | None = None):
    from .spectra.problems import discretize
    key = ("disc", p, ctx.level if level is None else level)
    if key not in ctx._mesh:
        ctx._mesh[key] = discretize(ctx.mesh(level), ctx.weight, p)
    return ctx._mesh[key]


def first_eigenvalue(ctx: Context, problem: str, p: int, level: int | None = None,
                     method: str = "lanczos"):
    """(value, EigenResult, zero-mode count) of the first (positive) eigenvalue."""
    from .spectra.boundary import boundary_function_spectrum
    from .spectra.problems import (betti_zero_count, first_positive, solve_fourth_order,
                                   solve_second_order)
    k = int(ctx.params.get("k", 4))
    if problem == "boundary_spectrum":
        res = boundary_function_spectrum(ctx.mesh(level), ctx.weight, k=max(k, 6), seed=ctx.seed,
                                         method=method)
        return res.meta["positive"][0], res, res.meta["zero_modes"]
    disc = _disc(ctx, p, level)
    if problem == "neumann":
        if method == "lanczos":
            _, res = betti_zero_count(disc, k=k + 2, seed=ctx.seed)
        else:
            res = solve_second_order("neumann", disc, k=k + 2, seed=ctx.seed, method=method)
        val, zero = first_positive(res)
        return val, res, zero
    if problem == "dirichlet":
        res = solve_second_order(problem, disc, k=k, seed=ctx.seed, method=method)
    else:
        res = solve_fourth_order(problem, disc, k=k, seed=ctx.seed, method=method)
    return float(res.eigenvalues[0]), res, 0


def check_spectrum(ctx: Context, check: str, p: int) -> list:
    from .spectra.boundary import multiplicity
    from .spectra.eigen import RESIDUAL_TOL

    if check == "betti":
        from .spectra.problems import betti_zero_count
        expected = ineq.betti_number(ctx.domain, p)
        count, res = betti_zero_count(_disc(ctx, p), k=expected + 4, seed=ctx.seed)
        verdict = "pass" if count == expected else "fail"
        return [reports.record(ctx.name, check, "eigen", "betti", float(expected), float(count),
                               float(-abs(count - expected)), 0.0, verdict, p,
                               res.to_dict(zero_modes=count, betti=expected))]
    if check == "solver_equivalence":
        return _solver_equivalence(ctx, p)
    p_rec = None if check == "boundary_spectrum" else p
    val, res, zero = first_eigenvalue(ctx, check, p)
    ok = bool(np.all(res.residuals <= RESIDUAL_TOL))
    target, rel = _oracle(ctx, check)
    data = res.to_dict(first=val, zero_modes=zero)
    if check == "boundary_spectrum":
        data["multiplicity"] = multiplicity(res.meta["positive"], val)
        want = ctx.params.get("oracle", {}).get("multiplicity")
        ok = ok and (want is None or data["multiplicity"] == want)
    if target is None:
        return [reports.record(ctx.name, check, "eigen", check, val, None, None, None,
                               "pass" if ok else "fail", p_rec, data)]
    gap = abs(val - target) / abs(target)
    verdict = "pass" if ok and gap <= rel else "fail"
    return [reports.record(ctx.name, check, "eigen", check, val, target, rel - gap, gap, verdict,
                           p_rec, data)]


def _solver_equivalence(ctx: Context, p: int) -> list:
    """Lanczos against the dense reference on every system within the dense limit."""
    from .spectra.eigen import DENSE_LIMIT
    out = []
    problems = ctx.params.get("problems", ["dirichlet", "neumann", "buckling", "clamped"])
    for problem in problems:
        disc = _disc(ctx, p) if problem != "boundary_spectrum" else None
        if disc is not None:
            size = disc.space("full" if problem != "neumann" else "normal").size
            if size > DENSE_LIMIT:
                continue
        a, ra, _ = first_eigenvalue(ctx, problem, p, method="lanczos")
        b, rb, _ = first_eigenvalue(ctx, problem, p, method="dense")
        if rb.meta.get("dim", 0) > DENSE_LIMIT:
            continue
        k = min(len(ra.eigenvalues), len(rb.eigenvalues))
        rel = float(np.max(np.abs(ra.eigenvalues[:k] - rb.eigenvalues[:k])
                           / np.maximum(1.0, np.abs(rb.eigenvalues[:k]))))
        tol = ctx.tol["solver_equivalence"]
        out.append(reports.record(ctx.name, "solver_equivalence", "eigen", f"solver_equivalence:{problem}",
                                  a, b, tol - rel, rel, "pass" if rel <= tol else "fail", p,
                                  {"lanczos": [float(v) for v in ra.eigenvalues],
                                   "dense": [float(v) for v in rb.eigenvalues],
                                   "dim": int(rb.meta.get("dim", 0))}))
    return out


# ------------------------------------------------------------------ inequality checks

def check_inequality(ctx: Context, check: str, p: int) -> list:
    f, dom, prm = ctx.weight, ctx.domain, ctx.params
    refine = bool(prm.get("refine", True))
    m = ctx.level
    if check == "poincare":
        out = ineq.poincare_check(dom, f, p, _alpha(ctx, p), m=m, refine=refine,
                                  extension=bool(prm.get("extension", False)))
    elif check == "poincare_general":
        alpha = None if prm.get("zero_alpha") else _alpha(ctx, p)
        out = ineq.poincare_general_check(dom, f, p, float(prm["c"]), alpha, m=m, refine=refine)
    elif check == "boundary_eigen_bound":
        out = ineq.boundary_eigen_bound_check(dom, f, p, prm.get("c"), m=m, seed=ctx.seed,
                                              refine=refine)
    elif check == "mean_curvature_euclidean":
        out = ineq.mean_curvature_euclidean_check(dom, f, p, m=m, refine=refine)
    elif check == "mean_curvature_sphere":
        out = ineq.mean_curvature_sphere_check(dom, f, p, float(prm["c"]), m=m, refine=refine)
    elif check == "ordering":
        return [_outcome_record(ctx, check, p, o)
                for o in ineq.ordering_check(ctx.mesh(), f, p, seed=ctx.seed, refine=refine)]
    elif check == "eigenvalue_lower_bound":
        spectra = ineq._levels(ctx.mesh(), f, ctx.seed, refine)
        kinds = prm.get("kinds", ["dirichlet", "neumann", "buckling", "clamped"])
        return [_outcome_record(ctx, check, p, ineq.eigenvalue_lower_bound_check(
            k, dom, f, p, float(prm["N"]), m=m, seed=ctx.seed, spectra=spectra)) for k in kinds]
    elif check == "kernel":
        weights = [weight_from_spec(w, ctx.n) for w in prm["weights"]] if "weights" in prm else [f]
        return [_outcome_record(ctx, check, p, o)
                for o in ineq.kernel_checks(dom, weights, p, m=m, seed=ctx.seed)]
    else:
        raise KeyError(check)
    return [_outcome_record(ctx, check, p, out)]


# ------------------------------------------------------------------ running

_NO_DEGREE = ("volume", "boundary_spectrum")


def run_check(ctx: Context, check: str, p: int) -> list:
    if check in IDENTITY_CHECKS:
        return check_identity(ctx, check, p)
    if check in SPECTRAL_CHECKS:
        return check_spectrum(ctx, check, p)
    return check_inequality(ctx, check, p)


def run_case(case: dict, suite_seed: int) -> tuple[list, float]:
    """All records of one case (errors recorded per check) and its wall-clock time."""
    t0 = time.perf_counter()
    records = []
    try:
        ctx = Context.from_case(case, suite_seed)
    except Exception as exc:  # invalid domain or weight parameters
        return [reports.error_record(case["name"], "setup", None, exc)], time.perf_counter() - t0
    for check in case["checks"]:
        degrees = [None] if check in _NO_DEGREE else case["p"]
        for p in degrees:
            try:
                records.extend(run_check(ctx, check, p))
            except Exception as exc:
                records.append(reports.error_record(ctx.name, check, p, exc))
    return records, time.perf_counter() - t0


def run_config(config: dict, threads: int = 1) -> dict:
    """Run every case; records are emitted in configuration order."""
    validate(config)
    cases = config["cases"]
    if threads > 1 and len(cases) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: run_case(c, config["seed"]), cases))
    else:
        results = [run_case(c, config["seed"]) for c in cases]
    records = [r for recs, _ in results for r in recs]
    timing = {c["name"]: t for c, (_, t) in zip(cases, results)}
    header = {"type": "header", "version": reports.artifact_version(), "config": config}
    summary = {"type": "summary", "counts": reports.tally(records),
               "cases": {c["name"]: len(recs) for c, (recs, _) in zip(cases, results)}}
    return {"header": header, "records": records, "summary": summary, "timing": timing}


def converge_case(case: dict, suite_seed: int, levels: int) -> list:
    """Convergence rows for every convergible check of a case on levels
    level, 2 level, ..., 2^(L-1) level."""
    ctx = Context.from_case(case, suite_seed)
    ctx.spec = {k: v for k, v in ctx.spec.items() if k != "h"}
    ms = [ctx.level * 2 ** i for i in range(levels)]
    hs = [ctx.mesh(m).h for m in ms]
    rows = []
    for check in case["checks"]:
        if check not in CONVERGIBLE:
            continue
        degrees = [None] if check in _NO_DEGREE else case["p"]
        for p in degrees:
            if check in ("partial_integration", "green", "reilly", "volume"):
                vals = [_integral_report(ctx, check, p, m).abs_residual for m in ms]
                rows += reports.convergence_rows(ctx.name, check, p, "abs_residual", ms, hs, vals, 0.0)
            else:
                vals = [first_eigenvalue(ctx, check, p, m)[0] for m in ms]
                rows += reports.convergence_rows(ctx.name, check, p, "first_eigenvalue", ms, hs, vals)
    return rows
