"""Analytic domains (balls, annuli/shells, ellipsoids) and exact boundary geometry.

All normals are inward.  The shape operator is S(X) = -D_X nu, so a
ball of radius R has every principal curvature equal to 1/R.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from ..forms import algebra


class InvalidParameterError(ValueError):
    pass


class PointOffBoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryPointData:
    """Curvature data at one boundary point.

    ``frame`` holds an orthonormal tangent basis as columns (n, n-1) with
    det[nu, frame] = +1; ``S`` is the shape operator in that basis.
    """

    x: np.ndarray
    nu: np.ndarray
    frame: np.ndarray
    S: np.ndarray
    eta: np.ndarray
    H: float
    sigma: np.ndarray  # sigma[p-1] = sigma_p, p = 1..n-1
    scal: float

    def sigma_p(self, p: int) -> float:
        if p == 0:
            return 0.0
        return float(self.sigma[p - 1])

    def shape_on_forms(self, p: int) -> np.ndarray:
        return algebra.derivation_matrix(self.S, p)


def tangent_frames(nu: np.ndarray) -> np.ndarray:
    """Orthonormal tangent columns for each unit normal; det[nu, E] = +1."""
    nu = np.atleast_2d(nu)
    N, n = nu.shape
    e1 = np.zeros(n)
    e1[0] = 1.0
    # Householder reflection taking e1 to nu (or to -nu when nu ~ e1)
    flip = nu[:, 0] > 0
    target = np.where(flip[:, None], -nu, nu)
    v = e1[None, :] - target
    vv = np.einsum("ni,ni->n", v, v)
    Hh = np.eye(n)[None] - 2 * v[:, :, None] * v[:, None, :] / vv[:, None, None]
    E = Hh[:, :, 1:].copy()
    full = np.concatenate([nu[:, :, None], E], axis=2)
    sign = np.sign(np.linalg.det(full))
    E[:, :, -1] *= sign[:, None]
    return E


@dataclass(frozen=True)
class Domain:
    kind: str
    n: int
    params: dict = field(default_factory=dict)

    # ---------------------------------------------------------- basic shape
    @property
    def radii(self):
        if self.kind == "ball":
            return (self.params["R"],)
        if self.kind == "annulus":
            return (self.params["R0"], self.params["R1"])
        raise AttributeError("ellipsoid has semi-axes, not radii")

    @property
    def axes(self) -> np.ndarray:
        if self.kind == "ellipsoid":
            return np.asarray(self.params["axes"], dtype=float)
        R = self.params["R"] if self.kind == "ball" else self.params["R1"]
        return np.full(self.n, float(R))

    @property
    def scale(self) -> float:
        return float(np.max(self.axes))

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, **self.params}

    # ---------------------------------------------------------- level sets
    def _ellipsoid_level(self, x):
        a = self.axes
        return np.sum((x / a) ** 2, axis=-1)

    def signed_distance(self, x) -> np.ndarray:
        """Negative inside, positive outside."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        if self.kind == "ball":
            return r - self.params["R"]
        if self.kind == "annulus":
            R0, R1 = self.params["R0"], self.params["R1"]
            return np.maximum(r - R1, R0 - r)
        proj = self.closest_point(x)
        d = np.linalg.norm(x - proj, axis=1)
        return np.where(self._ellipsoid_level(x) < 1, -d, d)

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        return self.signed_distance(x) <= tol

    def closest_point(self, x) -> np.ndarray:
        """Nearest point of the boundary."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind != "ellipsoid":
            r = np.linalg.norm(x, axis=1, keepdims=True)
            safe = np.where(r > 0, r, 1.0)
            u = np.where(r > 0, x / safe, np.eye(self.n)[0])
            if self.kind == "ball":
                return u * self.params["R"]
            R0, R1 = self.params["R0"], self.params["R1"]
            rr = np.where(np.abs(r - R0) < np.abs(r - R1), R0, R1)
            return u * rr
        return self._ellipsoid_closest(x)

    def _ellipsoid_closest(self, x):
        # y_i = a_i^2 x_i / (a_i^2 + t) with t the root of a decreasing secular function
        a2 = self.axes ** 2
        out = np.empty_like(x)
        for k, z in enumerate(x):
            def g(t):
                return np.sum(a2 * z * z / (a2 + t) ** 2) - 1
            lo = -np.min(a2) * (1 - 1e-12)
            hi = np.sqrt(np.sum(a2 * z * z)) + 1e-300
            if g(lo) <= 0 or g(hi) >= 0:
                # degenerate (near the medial axis or the origin): radial fallback
                out[k] = self.project(z[None])[0] if np.any(z) else np.sqrt(a2) * np.eye(self.n)[np.argmin(a2)]
                continue
            t = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)
            out[k] = a2 * z / (a2 + t)
        return out

    def project(self, x) -> np.ndarray:
        """Snap points near the boundary exactly onto it."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "ellipsoid":
            s = np.sqrt(self._ellipsoid_level(x))
            return x / s[:, None]
        return self.closest_point(x)

    def boundary_component(self, x) -> np.ndarray:
        """0 for the outer boundary, 1 for the inner sphere of an annulus."""
        x = np.atleast_2d(x)
        if self.kind != "annulus":
            return np.zeros(len(x), dtype=int)
        r = np.linalg.norm(x, axis=1)
        R0, R1 = self.params["R0"], self.params["R1"]
        return (np.abs(r - R0) < np.abs(r - R1)).astype(int)

    def check_on_boundary(self, x, tol: float = 1e-8) -> None:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "ellipsoid":
            # first-order distance |g| / |grad g| for g = sum (x/a)^2 - 1
            G = 2 * x / self.axes ** 2
            d = np.abs(self._ellipsoid_level(x) - 1) / np.linalg.norm(G, axis=1)
        else:
            d = np.abs(self.signed_distance(x))
        if np.any(d > tol * self.scale):
            raise PointOffBoundaryError(f"point off boundary by {float(np.max(d)):.3e}")

    # ---------------------------------------------------------- normal field
    def normal(self, x) -> np.ndarray:
        """Inward unit normal (extended smoothly off the boundary)."""
        return self.normal_and_jacobian(x)[0]

    def normal_and_jacobian(self, x):
        """Inward normal field nu and Dnu[k, i] = d_k nu_i of its extension."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = self.n
        eye = np.eye(n)[None]
        if self.kind == "ellipsoid":
            G = x / self.axes ** 2
            dG = np.diag(1 / self.axes ** 2)[None]
            g = np.linalg.norm(G, axis=1)
            nu = -G / g[:, None]
            Gd = np.einsum("ni,ki->nk", G, dG[0])  # (G . d_k G)
            D = -(dG / g[:, None, None] - Gd[:, :, None] * G[:, None, :] / g[:, None, None] ** 3)
            return nu, D
        r = np.linalg.norm(x, axis=1)
        u = x / r[:, None]
        P = (eye - u[:, :, None] * u[:, None, :]) / r[:, None, None]
        sgn = -np.ones(len(x))
        if self.kind == "annulus":
            sgn = np.where(self.boundary_component(x) == 1, 1.0, -1.0)
        return sgn[:, None] * u, sgn[:, None, None] * P

    # ---------------------------------------------------------- curvature
    def boundary_frames(self, x):
        """Return (nu, E, S) at boundary points, batched."""
        nu, D = self.normal_and_jacobian(x)
        E = tangent_frames(nu)
        S = -np.einsum("nka,nki,nib->nab", E, D, E)
        S = 0.5 * (S + np.swapaxes(S, 1, 2))
        return nu, E, S

    def boundary_data(self, x, tol: float = 1e-8) -> BoundaryPointData:
        x = np.asarray(x, dtype=float).reshape(self.n)
        self.check_on_boundary(x, tol)
        nu, E, S = self.boundary_frames(x[None])
        S = S[0]
        eta = np.linalg.eigvalsh(S)
        trS = float(np.trace(S))
        return BoundaryPointData(
            x=x, nu=nu[0], frame=E[0], S=S, eta=eta,
            H=trS / (self.n - 1), sigma=np.cumsum(eta),
            scal=trS ** 2 - float(np.trace(S @ S)),
        )

    def curvatures(self, x) -> np.ndarray:
        """Ascending principal curvatures at boundary points (N, n-1)."""
        return np.linalg.eigvalsh(self.boundary_frames(x)[2])

    # ---------------------------------------------------------- measures
    def volume(self) -> float:
        unit = np.pi if self.n == 2 else 4 * np.pi / 3
        if self.kind == "ball":
            return unit * self.params["R"] ** self.n
        if self.kind == "annulus":
            return unit * (self.params["R1"] ** self.n - self.params["R0"] ** self.n)
        return unit * float(np.prod(self.axes))

    def boundary_measure(self) -> float:
        unit = 2 * np.pi if self.n == 2 else 4 * np.pi
        if self.kind == "ball":
            return unit * self.params["R"] ** (self.n - 1)
        if self.kind == "annulus":
            return unit * (self.params["R1"] ** (self.n - 1) + self.params["R0"] ** (self.n - 1))
        a = np.sort(self.axes)[::-1]
        if self.n == 2:
            return 4 * a[0] * special.ellipe(1 - (a[1] / a[0]) ** 2)
        if np.isclose(a[0], a[2]):
            return 4 * np.pi * a[0] ** 2
        # Legendre form of the ellipsoid area, a >= b >= c
        phi = np.arccos(a[2] / a[0])
        m = (a[0] ** 2 * (a[1] ** 2 - a[2] ** 2)) / (a[1] ** 2 * (a[0] ** 2 - a[2] ** 2))
        return 2 * np.pi * a[2] ** 2 + 2 * np.pi * a[0] * a[1] / np.sin(phi) * (
            special.ellipeinc(phi, m) * np.sin(phi) ** 2 + special.ellipkinc(phi, m) * np.cos(phi) ** 2)


def build_domain(kind: str, n: int, params: dict | None = None) -> Domain:
    params = dict(params or {})
    if n not in (2, 3):
        raise InvalidParameterError("dimension must be 2 or 3")
    if kind == "ball":
        R = float(params.get("R", 1.0))
        if not R > 0:
            raise InvalidParameterError("radius must be positive")
        return Domain("ball", n, {"R": R})
    if kind == "annulus":
        R0, R1 = float(params.get("R0", 0.5)), float(params.get("R1", 1.0))
        if not (R0 > 0 and R1 > 0):
            raise InvalidParameterError("radii must be positive")
        if not R0 < R1:
            raise InvalidParameterError("inner radius must be below outer radius")
        return Domain("annulus", n, {"R0": R0, "R1": R1})
    if kind == "ellipsoid":
        axes = [float(a) for a in params.get("axes", [1.0] * n)]
        if len(axes) != n or min(axes) <= 0:
            raise InvalidParameterError("ellipsoid needs n positive semi-axes")
        return Domain("ellipsoid", n, {"axes": axes})
    raise InvalidParameterError(f"unknown domain kind {kind!r}")


def _sphere_points(n: int, spacing: float) -> np.ndarray:
    """Roughly uniform unit vectors with the given angular spacing."""
    if n == 2:
        K = max(8, int(np.ceil(2 * np.pi / spacing)))
        th = 2 * np.pi * np.arange(K) / K
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    K = max(20, int(np.ceil(4 * np.pi / spacing ** 2)))
    # Fibonacci lattice
    i = np.arange(K) + 0.5
    z = 1 - 2 * i / K
    phi = np.pi * (1 + 5 ** 0.5) * i
    rho = np.sqrt(1 - z * z)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def sample_points(domain: Domain, spacing: float) -> np.ndarray:
    """Grid points inside the domain plus boundary points, both at the given spacing."""
    n = domain.n
    ext = domain.scale
    g = np.arange(-ext, ext + spacing / 2, spacing)
    grid = np.stack(np.meshgrid(*([g] * n), indexing="ij"), axis=-1).reshape(-1, n)
    inside = grid[domain.signed_distance(grid) < 0] if domain.kind != "ellipsoid" \
        else grid[domain._ellipsoid_level(grid) < 1]
    return np.vstack([inside, boundary_sample_points(domain, spacing)])


def boundary_sample_points(domain: Domain, spacing: float) -> np.ndarray:
    """Points on every boundary component at roughly the given spacing."""
    u = _sphere_points(domain.n, spacing / domain.scale)
    if domain.kind == "ball":
        return u * domain.params["R"]
    if domain.kind == "annulus":
        return np.vstack([u * domain.params["R1"], u * domain.params["R0"]])
    return domain.project(u)
