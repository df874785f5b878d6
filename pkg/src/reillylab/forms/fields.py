"""Analytic test forms and weight densities.

Every field exposes ``jet(x, order)`` returning a :class:`FormJet`.
Polynomial fields have exact jets of any order; callback fields carry
user-supplied jets that are checked against central finite differences
when constructed.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite_e

from . import algebra
from .jets import FormJet
from .polynomial import Polynomial, monomial_exponents


class JetValidationError(ValueError):
    """User-supplied derivative callbacks disagree with finite differences."""


class AnalyticForm:
    """A p-form field on R^n given with derivative jets up to ``max_order``."""

    n: int
    p: int
    max_order: int
    name: str = "form"

    def _raw_jets(self, x: np.ndarray, order: int) -> list:
        raise NotImplementedError

    def jet(self, x, order: int) -> FormJet:
        if order > self.max_order:
            from .jets import JetOrderError
            raise JetOrderError(f"{self.name} carries jets up to order {self.max_order}")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return FormJet(self.n, self.p, self._raw_jets(x, order))

    def __call__(self, x) -> np.ndarray:
        return self.jet(x, 0).value

    def describe(self) -> dict:
        return {"name": self.name, "n": self.n, "p": self.p}


class PolynomialForm(AnalyticForm):
    def __init__(self, n: int, p: int, poly: Polynomial, name: str = "polynomial"):
        if poly.channels != algebra.dim(n, p):
            raise algebra.DegreeError("polynomial channel count must be C(n, p)")
        self.n, self.p, self.poly, self.name = n, p, poly, name
        self.max_order = 64

    def _raw_jets(self, x, order):
        return self.poly.jets(x, order)

    def scaled(self, c: float) -> "PolynomialForm":
        return PolynomialForm(self.n, self.p, Polynomial(self.n, self.poly.degree, c * self.poly.coef), self.name)

    def describe(self) -> dict:
        return {"name": self.name, "n": self.n, "p": self.p, "degree": self.poly.degree}


class CallbackForm(AnalyticForm):
    """Form given by callbacks ``jets[j](x) -> (N,) + (n,)*j + (C,)``."""

    def __init__(self, n: int, p: int, jets: Sequence[Callable], name: str = "callback",
                 validate: bool = True, seed: int = 0):
        self.n, self.p, self.name = n, p, name
        self._jets = list(jets)
        self.max_order = len(self._jets) - 1
        if validate and self.max_order >= 1:
            self.validate(seed=seed)

    def _raw_jets(self, x, order):
        return [np.asarray(self._jets[j](x), dtype=float) for j in range(order + 1)]

    def validate(self, npts: int = 8, step: float = 1e-4, seed: int = 0) -> float:
        """Compare each jet level with central differences of the one below.
        Returns the worst relative discrepancy; raises on failure."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(-0.9, 0.9, size=(npts, self.n))
        worst = 0.0
        for j in range(self.max_order):
            exact = self._raw_jets(x, j + 1)[j + 1]
            for k in range(self.n):
                e = np.zeros(self.n)
                e[k] = step
                fd = (self._jets[j](x + e) - self._jets[j](x - e)) / (2 * step)
                ex = np.take(exact, k, axis=j + 1)
                scale = max(1.0, float(np.max(np.abs(ex))))
                err = float(np.max(np.abs(fd - ex))) / scale
                worst = max(worst, err)
            sym = exact
            for a in range(1, j + 1):
                sym_err = float(np.max(np.abs(np.swapaxes(sym, a, j + 1) - sym)))
                worst = max(worst, sym_err)
        # central differences carry O(step^2) error with smooth data
        if worst > 1e-5:
            raise JetValidationError(f"{self.name}: jets disagree with finite differences ({worst:.2e})")
        return worst


# ---------------------------------------------------------------- catalog

def constant_form(n: int, I: Sequence[int], value: float = 1.0) -> PolynomialForm:
    """value * dx_I (0-based indices)."""
    p = len(I)
    coef = value * algebra.basis_form(n, I)[None, :]
    return PolynomialForm(n, p, Polynomial(n, 0, coef), name=f"dx{''.join(str(i + 1) for i in I)}")


def coordinate_form(n: int, p: int, name: str = "coordinate") -> PolynomialForm:
    """sum_I x_{i_1} dx_I; for p = 1 this is sum_i x_i dx_i = d(|x|^2/2)."""
    C = algebra.dim(n, p)
    M = len(monomial_exponents(n, 1))
    coef = np.zeros((M, C))
    for c, I in enumerate(algebra.multi_indices(n, p)):
        if p == 0:
            coef[0, c] = 1.0
        else:
            coef[1 + I[0], c] = 1.0
    return PolynomialForm(n, p, Polynomial(n, 1, coef), name=name)


def polynomial(n: int, p: int, table: dict, name: str = "polynomial") -> PolynomialForm:
    """Form from ``{(I, exponent): coefficient}`` entries; I a 0-based index
    tuple (unsorted allowed), exponents of total degree <= 3."""
    C = algebra.dim(n, p)
    degree = max((sum(e) for _, e in table), default=0)
    if degree > 3:
        raise ValueError("catalog polynomials have degree <= 3")
    terms: dict = {}
    for (I, e), val in table.items():
        vec = val * algebra.basis_form(n, I)
        terms[tuple(e)] = terms.get(tuple(e), 0.0) + vec
    poly = Polynomial.from_terms(n, terms, channels=C) if terms else Polynomial(n, 0, np.zeros((1, C)))
    return PolynomialForm(n, p, poly, name=name)


def random_polynomial_form(n: int, p: int, degree: int, rng: np.random.Generator,
                           name: str = "random") -> PolynomialForm:
    C = algebra.dim(n, p)
    M = len(monomial_exponents(n, degree))
    return PolynomialForm(n, p, Polynomial(n, degree, rng.standard_normal((M, C))), name=name)


def radial(n: int, I: Sequence[int], scale: float = 1.0, max_order: int = 4) -> CallbackForm:
    """exp(-scale |x|^2 / 2) dx_I with exact jets."""
    I = tuple(I)
    p = len(I)
    vec = algebra.basis_form(n, I)
    # d^m/dt^m exp(-s t^2/2) = (-sqrt s)^m He_m(sqrt s t) exp(-s t^2/2)
    rs = np.sqrt(scale)

    def factor(t, m):
        c = np.zeros(m + 1)
        c[m] = 1.0
        return (-rs) ** m * hermite_e.hermeval(rs * t, c)

    def make(j):
        def jet(x):
            x = np.atleast_2d(x)
            N = x.shape[0]
            g = np.exp(-scale * np.sum(x * x, axis=1) / 2)
            out = np.empty((N,) + (n,) * j)
            for idx in np.ndindex(*(n,) * j):
                counts = np.bincount(np.array(idx, dtype=int), minlength=n) if j else np.zeros(n, int)
                val = g.copy()
                for a in range(n):
                    if counts[a]:
                        val = val * factor(x[:, a], counts[a])
                out[(slice(None),) + idx] = val
            return out[..., None] * vec
        return jet

    name = f"radial_dx{''.join(str(i + 1) for i in I)}"
    return CallbackForm(n, p, [make(j) for j in range(max_order + 1)], name=name)


def form_from_spec(spec: dict, n: int) -> AnalyticForm:
    """Build a catalog form from a config entry ``{"name": ..., ...}``."""
    kind = spec["name"]
    if kind == "constant_form":
        return constant_form(n, spec["I"], spec.get("value", 1.0))
    if kind == "coordinate_form":
        return coordinate_form(n, spec.get("p", 1))
    if kind == "polynomial":
        table = {(tuple(t["I"]), tuple(t["exponent"])): t["coef"] for t in spec["terms"]}
        return polynomial(n, spec["p"], table)
    if kind == "radial":
        return radial(n, spec["I"], spec.get("scale", 1.0))
    raise KeyError(f"unknown form catalog entry {kind!r}")


# ---------------------------------------------------------------- weights

class WeightField:
    """Density exponent f with dmu_f = exp(-f) dmu_g."""

    def __init__(self, n: int, poly: Polynomial, kind: str, params: dict):
        if poly.channels != 1:
            raise ValueError("weight must be scalar")
        self.n, self.poly, self.kind, self.params = n, poly, kind, dict(params)

    def jet(self, x, order: int = 2) -> FormJet:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return FormJet(self.n, 0, self.poly.jets(x, order))

    def value(self, x) -> np.ndarray:
        return self.poly(np.atleast_2d(x))[:, 0]

    def grad(self, x) -> np.ndarray:
        return self.poly.jets(np.atleast_2d(x), 1)[1][..., 0]

    def hessian(self, x) -> np.ndarray:
        return self.poly.jets(np.atleast_2d(x), 2)[2][..., 0]

    def density(self, x) -> np.ndarray:
        return np.exp(-self.value(x))

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.poly.coef[1:] == 0))

    def shifted(self, c: float) -> "WeightField":
        coef = self.poly.coef.copy()
        coef[0] += c
        return WeightField(self.n, Polynomial(self.n, self.poly.degree, coef), self.kind, self.params)

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params}


def constant_weight(n: int, c0: float = 0.0) -> WeightField:
    return WeightField(n, Polynomial(n, 0, np.array([[c0]])), "const", {"c0": c0})


def linear_weight(n: int, a: Sequence[float]) -> WeightField:
    a = [float(v) for v in a]
    if len(a) != n:
        raise ValueError("linear weight needs n coefficients")
    coef = np.array([[0.0]] + [[v] for v in a])
    return WeightField(n, Polynomial(n, 1, coef), "linear", {"a": a})


def quadratic_weight(n: int, kappa: float) -> WeightField:
    """kappa |x|^2 / 2, Hessian kappa * Id."""
    terms = {tuple(2 * np.eye(n, dtype=int)[i]): kappa / 2 for i in range(n)}
    return WeightField(n, Polynomial.from_terms(n, terms), "quadratic", {"kappa": float(kappa)})


def polynomial_weight(n: int, terms: dict) -> WeightField:
    return WeightField(n, Polynomial.from_terms(n, {tuple(e): v for e, v in terms.items()}),
                       "polynomial", {"terms": [[list(e), v] for e, v in terms.items()]})


def weight_from_spec(spec: dict, n: int) -> WeightField:
    kind = spec["kind"]
    if kind == "const":
        return constant_weight(n, spec.get("c0", 0.0))
    if kind == "linear":
        return linear_weight(n, spec["a"])
    if kind in ("quadratic", "gaussian"):
        return quadratic_weight(n, spec.get("kappa", 1.0))
    if kind == "polynomial":
        return polynomial_weight(n, {tuple(t[0]): t[1] for t in spec["terms"]})
    raise KeyError(f"unknown weight kind {kind!r}")

