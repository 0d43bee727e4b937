"""Polytopes, simplicial tessellations and point location.

A :class:`Tessellation` covers ``closure(region \\ hole)`` with simplices.
Vertices are indexed into one shared pool, so two cells share a vertex
exactly when they reference the same pool index. Continuity constraints
downstream rely on this (no coordinate matching).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, Delaunay, HalfspaceIntersection

from .errors import DegenerateInput, HoleNotContained, OutsideRegion

INTERIOR, BOUNDARY, HOLE = 0, 1, 2
FLAG_NAMES = ("interior", "boundary", "hole")

# relative to region diameter
GEO_TOL = 1e-9
JITTER = 1e-12


def _as_points(x, dim=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :] if dim is None or x.shape[0] == dim else x[:, None]
    return x


class Polytope:
    """Convex polytope ``{x : A x <= b}`` with an optional vertex list.

    Use :meth:`box`, :meth:`point` or :meth:`from_vertices` rather than the
    raw constructor unless the halfspaces are already at hand.
    """

    def __init__(self, A, b, vertices=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError("A and b disagree on the number of halfspaces")
        self.A = A
        self.b = b
        if vertices is None:
            vertices = _enumerate_vertices(A, b)
        self.vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        if self.vertices.shape[0] == 0:
            raise DegenerateInput("polytope is empty")
        self.tol = GEO_TOL * max(self.diameter, 1.0)

    @classmethod
    def box(cls, lo, hi, dim=None) -> "Polytope":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.ndim == 0:
            lo = np.full(dim or 1, float(lo))
        if hi.ndim == 0:
            hi = np.full(lo.shape[0], float(hi))
        n = lo.shape[0]
        if np.any(hi < lo):
            raise ValueError("box with hi < lo")
        A = np.vstack([np.eye(n), -np.eye(n)])
        b = np.concatenate([hi, -lo])
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(n, -1).T
        corners = np.unique(corners, axis=0)
        return cls(A, b, corners)

    @classmethod
    def cube(cls, half_width: float, dim: int = 2) -> "Polytope":
        return cls.box(-np.full(dim, half_width), np.full(dim, half_width))

    @classmethod
    def point(cls, x) -> "Polytope":
        x = np.asarray(x, dtype=float).reshape(-1)
        return cls.box(x, x)

    @classmethod
    def from_vertices(cls, vertices) -> "Polytope":
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if V.shape[1] == 1:
            return cls.box(V.min(0), V.max(0))
        hull = ConvexHull(V)
        eq = hull.equations
        return cls(eq[:, :-1], -eq[:, -1], V[hull.vertices])

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def diameter(self) -> float:
        V = self.vertices
        if len(V) < 2:
            return 0.0
        d = V[:, None, :] - V[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    @property
    def has_interior(self) -> bool:
        return _chebyshev_radius(self.A, self.b) > self.tol

    def contains(self, x, tol=None) -> np.ndarray:
        tol = self.tol if tol is None else tol
        X = _as_points(x, self.dim)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    def contains_interior(self, x, tol=None) -> np.ndarray:
        tol = self.tol if tol is None else tol
        X = _as_points(x, self.dim)
        return np.all(X @ self.A.T < self.b - tol, axis=1)

    def on_boundary(self, x, tol=None) -> np.ndarray:
        tol = self.tol if tol is None else tol
        inside = self.contains(x, tol)
        if not self.has_interior:
            return inside
        X = _as_points(x, self.dim)
        active = np.abs(X @ self.A.T - self.b) <= tol
        return inside & np.any(active, axis=1)

    def contains_polytope(self, other: "Polytope", tol=None) -> bool:
        return bool(np.all(self.contains(other.vertices, tol)))

    def bounding_box(self):
        return self.vertices.min(0), self.vertices.max(0)

    def volume(self) -> float:
        if self.dim == 1:
            return float(np.ptp(self.vertices[:, 0]))
        if not self.has_interior:
            return 0.0
        return float(ConvexHull(self.vertices).volume)

    def distance(self, x) -> np.ndarray:
        """Euclidean distance from each point to the polytope."""
        X = _as_points(x, self.dim)
        out = np.zeros(len(X))
        outside = ~self.contains(X, tol=0.0)
        if not np.any(outside):
            return out
        lo, hi = self.bounding_box()
        if self._is_box():
            P = np.clip(X[outside], lo, hi)
            out[outside] = np.linalg.norm(X[outside] - P, axis=1)
        elif self.dim == 2:
            out[outside] = _polygon_distance(self.vertices, X[outside])
        else:
            out[outside] = [np.linalg.norm(p - _dykstra(self.A, self.b, p)) for p in X[outside]]
        return out

    def _is_box(self) -> bool:
        return bool(np.all(np.count_nonzero(self.A, axis=1) == 1))

    def check(self) -> None:
        """Assert boundedness/vertex consistency (used by tests)."""
        assert np.all(self.contains(self.vertices))
        if self.has_interior:
            act = np.abs(self.vertices @ self.A.T - self.b) <= self.tol
            assert np.all(act.sum(1) >= self.dim)

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "vertices": self.vertices.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Polytope":
        return cls(d["A"], d["b"], d.get("vertices"))

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return (
            self.A.shape == other.A.shape
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.vertices, other.vertices)
        )

    def __repr__(self):
        lo, hi = self.bounding_box()
        return f"Polytope(dim={self.dim}, m={len(self.b)}, bbox={lo.tolist()}..{hi.tolist()})"


def _chebyshev_radius(A, b) -> float:
    norms = np.linalg.norm(A, axis=1)
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=np.hstack([A, norms[:, None]]),
        b_ub=b,
        bounds=[(None, None)] * n + [(0, None)],
        method="highs",
    )
    if res.status != 0:
        if res.status == 3:
            raise DegenerateInput("polytope is unbounded")
        return -1.0
    return float(res.x[-1])


def _enumerate_vertices(A, b) -> np.ndarray:
    n = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=np.hstack([A, norms[:, None]]),
        b_ub=b,
        bounds=[(None, None)] * n + [(0, None)],
        method="highs",
    )
    if res.status == 3:
        raise DegenerateInput("polytope is unbounded")
    if res.status != 0:
        raise DegenerateInput("polytope is empty")
    center, radius = res.x[:-1], res.x[-1]
    if n == 1:
        a = A[:, 0]
        hi = np.min(b[a > 0] / a[a > 0])
        lo = np.max(b[a < 0] / a[a < 0])
        return np.array([[lo], [hi]]) if hi > lo else np.array([[lo]])
    if radius <= 1e-12:
        raise DegenerateInput("vertex enumeration needs a full-dimensional polytope")
    hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), center)
    V = hs.intersections
    # merge numerically duplicated vertices
    keep = []
    for v in V:
        if not any(np.linalg.norm(v - w) < 1e-10 for w in keep):
            keep.append(v)
    return np.array(keep)


def _polygon_distance(V, P) -> np.ndarray:
    hull = ConvexHull(V)
    ring = V[hull.vertices]
    a = ring
    bnext = np.roll(ring, -1, axis=0)
    d = np.full(len(P), np.inf)
    for p0, p1 in zip(a, bnext):
        e = p1 - p0
        t = np.clip(((P - p0) @ e) / (e @ e), 0.0, 1.0)
        d = np.minimum(d, np.linalg.norm(P - (p0 + t[:, None] * e), axis=1))
    return d


def _dykstra(A, b, x, iters=5000):
    y = x.copy()
    incr = np.zeros((len(b), len(x)))
    for _ in range(iters):
        prev = y.copy()
        for i in range(len(b)):
            z = y + incr[i]
            viol = A[i] @ z - b[i]
            y = z - max(viol, 0.0) * A[i] / (A[i] @ A[i])
            incr[i] = z - y
        if np.linalg.norm(y - prev) < 1e-14:
            break
    return y


class Cell(NamedTuple):
    id: int
    vertex_ids: tuple
    vertices: np.ndarray


@dataclass
class Tessellation:
    """Simplicial tessellation of ``closure(region \\ hole)``.

    ``flags[i]`` is one of INTERIOR, BOUNDARY (on the region boundary) or
    HOLE (on the hole boundary). ``kinds[i]`` records where vertex ``i``
    came from: ``region``, ``hole``, ``seed``, ``steiner`` or ``refine``.
    """

    points: np.ndarray
    cells: np.ndarray
    region: Polytope
    hole: Optional[Polytope] = None
    kinds: Optional[np.ndarray] = None
    flags: np.ndarray = field(init=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        self.cells = np.asarray(self.cells, dtype=np.int64)
        if self.kinds is None:
            self.kinds = np.array(["seed"] * len(self.points), dtype=object)
        else:
            self.kinds = np.asarray(self.kinds, dtype=object)
        self.flags = classify_points(self.points, self.region, self.hole)
        self._cache = {}

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def tol(self) -> float:
        return self.region.tol

    @property
    def fixed(self) -> np.ndarray:
        return np.isin(self.kinds, ["region", "hole", "steiner"])

    def cell(self, k: int) -> Cell:
        ids = tuple(int(i) for i in self.cells[k])
        return Cell(k, ids, self.points[list(ids)])

    def cell_points(self) -> np.ndarray:
        return self.points[self.cells]

    def cell_sizes(self) -> np.ndarray:
        return np.full(self.n_cells, self.dim + 1)

    def volumes(self) -> np.ndarray:
        P = self.cell_points()
        E = P[:, 1:, :] - P[:, :1, :]
        fact = float(np.prod(np.arange(1, self.dim + 1)))
        return np.abs(np.linalg.det(E)) / fact

    def barycenters(self) -> np.ndarray:
        return self.cell_points().mean(axis=1)

    def _barycentric_maps(self):
        if "bary" not in self._cache:
            P = self.cell_points()
            E = np.transpose(P[:, 1:, :] - P[:, :1, :], (0, 2, 1))
            T = np.linalg.inv(E)
            grad0 = -T.sum(axis=1, keepdims=True)
            grads = np.concatenate([grad0, T], axis=1)
            self._cache["bary"] = (P[:, 0, :], T, np.linalg.norm(grads, axis=2))
        return self._cache["bary"]

    def barycentric(self, x, cells=None) -> np.ndarray:
        """Barycentric coordinates of points ``x`` (m, n) in every cell: (m, K, n+1)."""
        v0, T, _ = self._barycentric_maps()
        if cells is not None:
            v0, T = v0[cells], T[cells]
        X = _as_points(x, self.dim)
        lam = np.einsum("kij,mkj->mki", T, X[:, None, :] - v0[None, :, :])
        return np.concatenate([1.0 - lam.sum(axis=2, keepdims=True), lam], axis=2)

    def membership(self, x, tol=None, chunk=2048) -> np.ndarray:
        """Boolean (m, K) matrix: point ``i`` lies in closed cell ``k`` within ``tol``."""
        tol = self.tol if tol is None else tol
        X = _as_points(x, self.dim)
        _, _, gnorm = self._barycentric_maps()
        out = np.zeros((len(X), self.n_cells), dtype=bool)
        for s in range(0, len(X), chunk):
            lam = self.barycentric(X[s : s + chunk])
            out[s : s + chunk] = np.all(lam >= -tol * gnorm[None], axis=2)
        return out

    def locate(self, x) -> set:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if not self.region.contains(x)[0]:
            raise OutsideRegion(f"{x[0].tolist()} is outside the region")
        found = {int(k) for k in np.flatnonzero(self.membership(x)[0])}
        if not found:
            raise OutsideRegion(f"{x[0].tolist()} is not in any cell")
        return found

    def vertex_cells(self) -> list:
        if "vcells" not in self._cache:
            inc = [[] for _ in range(self.n_vertices)]
            for k, cell in enumerate(self.cells):
                for v in cell:
                    inc[int(v)].append(k)
            self._cache["vcells"] = inc
        return self._cache["vcells"]

    def facets(self) -> dict:
        """Map sorted facet vertex tuples to the cells containing them."""
        out = {}
        n = self.dim
        for k, cell in enumerate(self.cells):
            for j in range(n + 1):
                f = tuple(sorted(int(v) for i, v in enumerate(cell) if i != j))
                out.setdefault(f, []).append(k)
        return out

    def boundary_vertices(self) -> dict:
        return {
            "boundary": np.flatnonzero(self.flags == BOUNDARY).tolist(),
            "hole": np.flatnonzero(self.flags == HOLE).tolist(),
            "interior": np.flatnonzero(self.flags == INTERIOR).tolist(),
        }

    def check(self, n_mc: int = 0, rng_seed: int = 0) -> None:
        """Assert the structural invariants; raises AssertionError."""
        vol = self.volumes()
        assert np.all(vol > 0), "degenerate cell"
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.cells.ravel()] = True
        assert used.all(), "unused vertex in pool"
        tol = 10 * self.tol
        for f, ks in self.facets().items():
            assert len(ks) <= 2, f"facet {f} shared by {len(ks)} cells"
            if len(ks) == 1:
                P = self.points[list(f)]
                on_region = np.any(np.all(np.abs(P @ self.region.A.T - self.region.b) <= tol, axis=0))
                on_hole = False
                if self.hole is not None:
                    on_hole = bool(np.all(self.hole.contains(P, tol)))
                assert on_region or on_hole, f"hanging facet {f}"
        b = self.flags == BOUNDARY
        assert np.all(self.region.on_boundary(self.points[b]))
        i = self.flags == INTERIOR
        if np.any(i):
            assert np.all(self.region.contains_interior(self.points[i], tol=0.0))
        if n_mc:
            rng = np.random.default_rng(rng_seed)
            lo, hi = self.region.bounding_box()
            X = rng.uniform(lo, hi, size=(n_mc, self.dim))
            X = X[self.region.contains_interior(X, tol=0.0)]
            if self.hole is not None:
                X = X[~self.hole.contains(X, tol=0.0)]
            mem = self.membership(X)
            cover = mem.any(axis=1).mean()
            assert cover >= 1 - 1e-3, f"coverage {cover}"

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "vertices": [
                {"x": p.tolist(), "flag": FLAG_NAMES[f], "kind": str(kd)}
                for p, f, kd in zip(self.points, self.flags, self.kinds)
            ],
            "cells": self.cells.tolist(),
            "region": self.region.to_dict(),
            "hole": None if self.hole is None else self.hole.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tessellation":
        pts = np.array([v["x"] for v in d["vertices"]], dtype=float).reshape(len(d["vertices"]), d["dim"])
        kinds = [v.get("kind", "seed") for v in d["vertices"]]
        hole = None if d.get("hole") is None else Polytope.from_dict(d["hole"])
        cells = np.array(d["cells"], dtype=np.int64).reshape(-1, d["dim"] + 1)
        return cls(pts, cells, Polytope.from_dict(d["region"]), hole, kinds)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, s: str) -> "Tessellation":
        return cls.from_dict(json.loads(s))


def classify_points(points, region: Polytope, hole: Optional[Polytope]) -> np.ndarray:
    flags = np.full(len(points), INTERIOR, dtype=np.int64)
    if hole is not None:
        flags[hole.on_boundary(points, tol=region.tol)] = HOLE
    flags[region.on_boundary(points)] = BOUNDARY
    return flags


def sample_seeds(region: Polytope, hole: Optional[Polytope], n: int, rng_seed: int) -> np.ndarray:
    """``n`` uniform points in ``region \\ hole`` (rejection sampling)."""
    rng = np.random.default_rng(rng_seed)
    lo, hi = region.bounding_box()
    out = np.empty((0, region.dim))
    while len(out) < n:
        X = rng.uniform(lo, hi, size=(max(2 * n, 16), region.dim))
        ok = region.contains_interior(X, tol=0.0)
        if hole is not None:
            ok &= ~hole.contains(X, tol=0.0)
        out = np.vstack([out, X[ok]])
    return out[:n]


def _affine_rank(P) -> int:
    if len(P) < 2:
        return 0
    return int(np.linalg.matrix_rank(P[1:] - P[0], tol=1e-12 * max(1.0, np.abs(P).max())))


def _jittered(P, diam) -> np.ndarray:
    # rank along lexicographic order makes the perturbation reproducible
    order = np.lexsort(P.T[::-1])
    rank = np.empty(len(P))
    rank[order] = np.arange(len(P))
    n = P.shape[1]
    direction = np.array([1.0 / (1.0 + 0.618034 * d + 0.1 * d * d) for d in range(n)])
    return P + JITTER * diam * (rank / max(len(P), 1))[:, None] * direction[None, :]


def _hole_encroached(seeds, hole: Polytope) -> np.ndarray:
    """Seeds strictly inside the diametral ball of some hole edge (2-D only)."""
    bad = np.zeros(len(seeds), dtype=bool)
    if hole.dim != 2 or not hole.has_interior:
        return bad
    hull = ConvexHull(hole.vertices)
    ring = hole.vertices[hull.vertices]
    for a, b in zip(ring, np.roll(ring, -1, axis=0)):
        mid, rad = 0.5 * (a + b), 0.5 * np.linalg.norm(b - a)
        bad |= np.linalg.norm(seeds - mid, axis=1) < rad
    return bad


def delaunay_tessellate(
    region: Polytope,
    hole: Optional[Polytope] = None,
    seeds=None,
    rng_seed: int = 0,
    extra_fixed=None,
) -> Tessellation:
    """Delaunay tessellation of ``region \\ hole``.

    ``seeds`` is either an array of points or an integer count, in which case
    that many uniform seeds are drawn with ``rng_seed``. Seeds inside the hole
    or inside the diametral ball of a hole edge are discarded so the Delaunay
    edges conform to the hole; missing hole edges are split at midpoints.
    ``extra_fixed`` are additional mandatory points (e.g. the previous stage's
    vertices on the hole boundary).
    """
    n = region.dim
    if hole is not None:
        if hole.dim != n:
            raise HoleNotContained("hole dimension differs from region")
        if not region.contains_polytope(hole):
            raise HoleNotContained("hole is not contained in the region")
    if seeds is None:
        seeds = np.empty((0, n))
    elif np.isscalar(seeds):
        seeds = sample_seeds(region, hole, int(seeds), rng_seed)
    seeds = np.asarray(seeds, dtype=float).reshape(-1, n)

    tol = region.tol
    fixed = [region.vertices]
    kinds = ["region"] * len(region.vertices)
    if hole is not None:
        fixed.append(hole.vertices)
        kinds += ["hole"] * len(hole.vertices)
    if extra_fixed is not None and len(extra_fixed):
        ef = np.asarray(extra_fixed, dtype=float).reshape(-1, n)
        fixed.append(ef)
        kinds += ["hole"] * len(ef)
    fixed = np.vstack(fixed)

    keep = region.contains(seeds)
    if hole is not None:
        keep &= ~hole.contains(seeds, tol=tol)
        keep &= ~_hole_encroached(seeds, hole)
    seeds = seeds[keep]

    pts, kinds = _dedup(fixed, kinds, seeds, tol)
    if _affine_rank(pts) < n:
        raise DegenerateInput("point pool is affinely dependent")

    for _ in range(50):
        simplices = _triangulate(pts, region, hole)
        missing = _missing_hole_edges(pts, simplices, hole, tol)
        if not missing:
            break
        pts = np.vstack([pts, missing])
        kinds = kinds + ["steiner"] * len(missing)
    else:  # pragma: no cover
        raise DegenerateInput("could not conform the triangulation to the hole")

    used = np.unique(simplices)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return Tessellation(pts[used], remap[simplices], region, hole, np.array(kinds, dtype=object)[used])


def _dedup(fixed, kinds, seeds, tol):
    pts = []
    out_kinds = []
    for p, kd in zip(np.vstack([fixed, seeds]), kinds + ["seed"] * len(seeds)):
        if pts and np.min(np.linalg.norm(np.array(pts) - p, axis=1)) <= tol:
            continue
        pts.append(p)
        out_kinds.append(kd)
    return np.array(pts), out_kinds


def _triangulate(pts, region, hole) -> np.ndarray:
    n = pts.shape[1]
    diam = max(region.diameter, 1.0)
    if n == 1:
        order = np.argsort(pts[:, 0], kind="stable")
        simplices = np.stack([order[:-1], order[1:]], axis=1)
    else:
        tri = Delaunay(_jittered(pts, diam), qhull_options="Qbb Qc Qz Q12 Qt")
        simplices = tri.simplices.astype(np.int64)
    P = pts[simplices]
    E = P[:, 1:, :] - P[:, :1, :]
    vol = np.abs(np.linalg.det(E))
    ok = vol > 1e-14 * diam**n
    if hole is not None and hole.has_interior:
        ok &= ~hole.contains_interior(P.mean(axis=1), tol=0.0)
    simplices = simplices[ok]
    # canonical vertex order inside each cell keeps JSON output reproducible
    return np.sort(simplices, axis=1)


def _missing_hole_edges(pts, simplices, hole, tol) -> list:
    if hole is None or not hole.has_interior or pts.shape[1] != 2:
        return []
    edges = set()
    for s in simplices:
        for a in range(3):
            for b in range(a + 1, 3):
                edges.add((min(s[a], s[b]), max(s[a], s[b])))
    hull = ConvexHull(hole.vertices)
    ring = hole.vertices[hull.vertices]
    missing = []
    for a, b in zip(ring, np.roll(ring, -1, axis=0)):
        e = b - a
        L2 = e @ e
        t = ((pts - a) @ e) / L2
        dist = np.linalg.norm(pts - (a + np.clip(t, 0, 1)[:, None] * e), axis=1)
        on = np.flatnonzero((dist <= 10 * tol) & (t >= -1e-12) & (t <= 1 + 1e-12))
        on = on[np.argsort(t[on])]
        for p, q in zip(on[:-1], on[1:]):
            if (min(p, q), max(p, q)) not in edges:
                missing.append(0.5 * (pts[p] + pts[q]))
    return missing


def refine_cell(tess: Tessellation, cell_id: int) -> Tessellation:
    """Split one simplex at its barycenter; other cells keep their ids."""
    if not 0 <= cell_id < tess.n_cells:
        raise IndexError(f"cell {cell_id} out of range")
    cell = tess.cells[cell_id]
    center = tess.points[cell].mean(axis=0)
    new_id = tess.n_vertices
    children = []
    for j in range(len(cell)):
        c = cell.copy()
        c[j] = new_id
        children.append(np.sort(c))
    cells = tess.cells.copy()
    cells[cell_id] = children[0]
    cells = np.vstack([cells, np.array(children[1:])])
    pts = np.vstack([tess.points, center])
    kinds = np.concatenate([tess.kinds, np.array(["refine"], dtype=object)])
    return Tessellation(pts, cells, tess.region, tess.hole, kinds)


def intervals_1d(breakpoints: Sequence[float], hole: Optional[Polytope] = None) -> Tessellation:
    """1-D tessellation of ``[min, max]`` with the given breakpoints."""
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    region = Polytope.box([bp[0]], [bp[-1]])
    return delaunay_tessellate(region, hole, bp[:, None])
