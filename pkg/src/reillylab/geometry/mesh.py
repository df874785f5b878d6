"""Simplicial meshes of the analytic domains.

A coarse template complex (polygon/icosahedron fan for balls, prism ring
for annuli) is refined uniformly by Freudenthal subdivision and pushed onto
the domain by a smooth, radially monotone map ``Phi``.  Boundary vertices
land exactly on the analytic boundary.  ``Phi`` is kept with the mesh so
quadrature can integrate over the curved elements Phi(T) themselves; the
straight-sided simplices through the mapped vertices are also available
(their volumes converge at second order).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations, permutations, product

import numpy as np

from .domain import Domain


class MeshQualityError(RuntimeError):
    pass


# ------------------------------------------------------------------ templates

def _polygon(K: int) -> np.ndarray:
    th = 2 * np.pi * np.arange(K) / K
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def _icosahedron():
    g = (1 + 5 ** 0.5) / 2
    V = []
    for s1, s2 in product((-1, 1), repeat=2):
        V += [(0, s1, s2 * g), (s1, s2 * g, 0), (s2 * g, 0, s1)]
    V = np.array(V, dtype=float)
    V /= np.linalg.norm(V[0])
    edge = min(np.linalg.norm(V[i] - V[j]) for i in range(12) for j in range(i + 1, 12))
    faces = []
    for tri in combinations(range(12), 3):
        if all(abs(np.linalg.norm(V[a] - V[b]) - edge) < 1e-9 for a, b in combinations(tri, 2)):
            faces.append(tri)
    return V, faces


def _gauge_vector(P: np.ndarray) -> np.ndarray:
    """a with a.y = 1 on the hyperplane through the rows of P."""
    return np.linalg.solve(P, np.ones(len(P))) if len(P) == P.shape[1] else None


@dataclass
class Template:
    vertices: np.ndarray        # template coordinates (V, n)
    simplices: np.ndarray       # (T, n+1) global vertex ids
    gauge: np.ndarray           # (T, n) sector vector a (t = a.y)
    t_inner: float              # gauge level of the inner boundary (annulus) or 0


def ball_template(n: int) -> Template:
    if n == 2:
        P = _polygon(6)
        faces = [(k, (k + 1) % 6) for k in range(6)]
    else:
        P, faces = _icosahedron()
    verts = np.vstack([np.zeros(n), P])
    simp, gauge = [], []
    for f in faces:
        ids = [0] + [i + 1 for i in f]
        simp.append(ids)
        gauge.append(_gauge_vector(P[list(f)]))
    return Template(verts, np.array(simp), np.array(gauge), 0.0)


def annulus_template(n: int, t_in: float) -> Template:
    if n == 2:
        P = _polygon(12)
        faces = [(k, (k + 1) % 12) for k in range(12)]
    else:
        P, faces = _icosahedron()
    m = len(P)
    verts = np.vstack([t_in * P, P])  # inner ids 0..m-1, outer m..2m-1
    simp, gauge = [], []
    for f in faces:
        a = _gauge_vector(P[list(f)])
        if n == 2:
            i, j = f
            lo, hi = sorted((i, j))
            # diagonal from the lower-id inner vertex to the higher-id outer vertex
            cells = [(lo, hi, hi + m), (lo, lo + m, hi + m)]
        else:
            a_, b_, c_ = sorted(f)
            cells = [(a_, b_, c_, c_ + m), (a_, b_, b_ + m, c_ + m), (a_, a_ + m, b_ + m, c_ + m)]
        for c in cells:
            simp.append(c)
            gauge.append(a)
    return Template(verts, np.array(simp), np.array(gauge), t_in)


# ------------------------------------------------------------------ maps

class RadialMap:
    """Phi for balls/ellipsoids (blend outside t >= t0) and annuli.

    ``evaluate(y, a)`` returns (Phi(y), DPhi(y)) for template points y in
    the sector with gauge vector a.
    """

    def __init__(self, domain: Domain, t_inner: float, t0: float = 0.0, k: int = 1):
        self.domain = domain
        self.t_inner = t_inner
        self.t0 = t0
        self.k = k

    def evaluate(self, y: np.ndarray, a: np.ndarray):
        y = np.atleast_2d(y)
        a = np.broadcast_to(a, y.shape)
        n = y.shape[1]
        t = np.einsum("ni,ni->n", a, y)
        r = np.linalg.norm(y, axis=1)
        eye = np.eye(n)[None]
        if self.domain.kind == "annulus":
            R0, R1 = self.domain.params["R0"], self.domain.params["R1"]
            slope = (R1 - R0) / (1 - self.t_inner)
            rho = R0 + (t - self.t_inner) * slope
            u = y / r[:, None]
            x = u * rho[:, None]
            D = (rho / r)[:, None, None] * (eye - u[:, :, None] * u[:, None, :]) \
                + slope * u[:, :, None] * a[:, None, :]
            return x, D
        R = self.domain.params["R"] if self.domain.kind == "ball" else 1.0
        z = np.clip((t - self.t0) / (1 - self.t0), 0.0, None)
        beta = z ** self.k
        dbeta = np.where(z > 0, self.k * z ** (self.k - 1) / (1 - self.t0), 0.0)
        rs = np.where(r > 0, r, 1.0)
        s = t * R / rs
        ds = R * (a / rs[:, None] - (t / rs ** 3)[:, None] * y)
        g = 1 + beta * (s - 1)
        dg = (dbeta * (s - 1))[:, None] * a + beta[:, None] * ds
        x = g[:, None] * y
        D = g[:, None, None] * eye + y[:, :, None] * dg[:, None, :]
        if self.domain.kind == "ellipsoid":
            ax = self.domain.axes
            x = x * ax
            D = ax[None, :, None] * D
        return x, D


# ------------------------------------------------------------------ subdivision

def _kuhn_pattern(n: int, m: int):
    """Lattice simplices of the m-fold Freudenthal subdivision in ordered
    coordinates m >= z_1 >= ... >= z_n >= 0, returned as barycentric
    numerator arrays (S, n+1, n+1)."""
    out = []
    for base in product(range(m), repeat=n):
        for perm in permutations(range(n)):
            pts = [np.array(base)]
            for ax in perm:
                q = pts[-1].copy()
                q[ax] += 1
                pts.append(q)
            ok = all(np.all(np.diff(q) <= 0) and q[0] <= m and q[-1] >= 0 for q in pts)
            if ok:
                bary = []
                for q in pts:
                    lam = np.empty(n + 1, dtype=int)
                    lam[0] = m - q[0]
                    lam[1:n] = q[:-1] - q[1:]
                    lam[n] = q[-1]
                    bary.append(lam)
                out.append(bary)
    return np.array(out, dtype=int)


def _orient(Y: np.ndarray, simp: np.ndarray) -> np.ndarray:
    P = Y[simp]
    A = P[:, 1:] - P[:, :1]
    det = np.linalg.det(A)
    simp = simp.copy()
    neg = det < 0
    simp[neg, 0], simp[neg, 1] = simp[neg, 1].copy(), simp[neg, 0].copy()
    return simp


@dataclass
class Mesh:
    domain: Domain
    vertices: np.ndarray          # physical coordinates (V, n)
    simplices: np.ndarray         # (E, n+1)
    boundary_facets: np.ndarray   # (F, n)
    facet_owner: np.ndarray       # (F,) element containing the facet
    facet_local: np.ndarray       # (F,) local index of the vertex opposite the facet
    template_vertices: np.ndarray
    gauge: np.ndarray             # (E, n)
    phi: RadialMap
    level: int                    # subdivision factor m
    h: float

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_facets)

    # affine template data per element
    def element_affine(self, elems=None):
        elems = np.arange(len(self.simplices)) if elems is None else elems
        Y = self.template_vertices[self.simplices[elems]]
        return Y[:, 0], np.swapaxes(Y[:, 1:] - Y[:, :1], 1, 2)  # y = Y0 + A xi

    def map_reference(self, elems: np.ndarray, xi: np.ndarray):
        """Physical points and Jacobians d x / d xi for reference points xi
        (Q, n) in each listed element -> x (len(elems), Q, n), J (.., n, n)."""
        Y0, A = self.element_affine(elems)
        y = Y0[:, None, :] + np.einsum("eij,qj->eqi", A, xi)
        a = np.repeat(self.gauge[elems], xi.shape[0], axis=0)
        x, D = self.phi.evaluate(y.reshape(-1, self.n), a)
        E, Q = len(elems), xi.shape[0]
        J = np.einsum("eqik,ekj->eqij", D.reshape(E, Q, self.n, self.n), A)
        return x.reshape(E, Q, self.n), J

    def linear_volumes(self) -> np.ndarray:
        P = self.vertices[self.simplices]
        A = P[:, 1:] - P[:, :1]
        from math import factorial
        return np.linalg.det(A) / factorial(self.n)

    def linear_boundary_measures(self) -> np.ndarray:
        P = self.vertices[self.boundary_facets]
        B = P[:, 1:] - P[:, :1]
        G = np.einsum("fai,fbi->fab", B, B)
        from math import factorial
        return np.sqrt(np.linalg.det(G)) / factorial(self.n - 1)

    def to_json(self) -> str:
        return json.dumps({
            "dimension": self.n,
            "vertices": self.vertices.tolist(),
            "simplices": self.simplices.tolist(),
            "boundary_facets": self.boundary_facets.tolist(),
            "h": self.h,
        })

    def refine(self) -> "Mesh":
        return build_mesh(self.domain, 2 * self.level)


def build_mesh(domain: Domain, m: int) -> Mesh:
    """Mesh with subdivision factor m (even, so the blend level t = 1/2
    of the ball map lies on element faces)."""
    if m < 1:
        raise ValueError("subdivision factor must be positive")
    n = domain.n
    if domain.kind == "annulus":
        t_in = domain.params["R0"] / domain.params["R1"]
        tmpl = annulus_template(n, t_in)
    else:
        tmpl = ball_template(n)
        t_in = 0.0
    if domain.kind == "ball":
        tmpl.vertices = tmpl.vertices * domain.params["R"]
        tmpl.gauge = tmpl.gauge / domain.params["R"]
    phi = RadialMap(domain, t_in)
    pattern = _kuhn_pattern(n, m)
    keys: dict = {}
    coords = []
    owner_gauge = []
    elements, elem_gauge = [], []
    for T, a in zip(tmpl.simplices, tmpl.gauge):
        gids = np.sort(T)
        Yt = tmpl.vertices[gids]
        for bary in pattern:
            ids = []
            for lam in bary:
                key = tuple((int(g), int(l)) for g, l in zip(gids, lam) if l)
                idx = keys.get(key)
                if idx is None:
                    idx = len(coords)
                    keys[key] = idx
                    coords.append(lam @ Yt / m)
                    owner_gauge.append(a)
                ids.append(idx)
            elements.append(ids)
            elem_gauge.append(a)
    Y = np.array(coords)
    simp = _orient(Y, np.array(elements))
    gauge = np.array(elem_gauge)
    X, _ = phi.evaluate(Y, np.array(owner_gauge))

    # boundary facets: faces belonging to exactly one element
    faces: dict = {}
    for e, s in enumerate(simp):
        for loc in range(n + 1):
            f = tuple(sorted(np.delete(s, loc)))
            if f in faces:
                faces[f] = None
            else:
                faces[f] = (e, loc)
    bf, owner, local = [], [], []
    for f, val in faces.items():
        if val is None:
            continue
        e, loc = val
        bf.append(np.delete(simp[e], loc))
        owner.append(e)
        local.append(loc)
    bf = np.array(bf)
    bverts = np.unique(bf)
    X[bverts] = domain.project(X[bverts])

    P = X[simp]
    A = P[:, 1:] - P[:, :1]
    vol = np.linalg.det(A)
    if np.any(vol <= 0):
        raise MeshQualityError("degenerate or inverted simplex after snapping")
    edges = np.concatenate([P[:, i] - P[:, j] for i, j in combinations(range(n + 1), 2)])
    h = float(np.max(np.linalg.norm(edges, axis=1)))
    return Mesh(domain, X, simp, bf, np.array(owner), np.array(local), Y, gauge, phi, m, h)


def generate_mesh(domain: Domain, target_h: float) -> Mesh:
    """Coarsest even subdivision whose mesh size is <= 1.5 * target_h."""
    if not target_h > 0:
        raise ValueError("target_h must be positive")
    m = 2
    while True:
        mesh = build_mesh(domain, m)
        if mesh.h <= 1.5 * target_h:
            return mesh
        # h scales like 1/m; jump close to the answer
        m = max(m + 2, 2 * int(np.ceil(m * mesh.h / (1.5 * target_h) / 2)))
