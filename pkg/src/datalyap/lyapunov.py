"""Piecewise-affine Lyapunov functions, certificates and learning loops."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import partial
from typing import List, Optional, Sequence

import numpy as np

from .dataset import Dataset, covering_check, relevance_sets
from .errors import ContinuityViolated, CoveringFailed, EmptyRoa, NotOptimal, StageFailed
from .geometry import BOUNDARY, HOLE, Polytope, Tessellation, delaunay_tessellate, refine_cell, sample_seeds
from .program import NO_BOUNDARY, WITH_BOUNDARY, ConicProgram, ProgramConfig, assemble
from .solver import Solution, SolverSettings, solve

CERTIFIED, NOT_CERTIFIED, COVERING_FAILED = "Certified", "NotCertified", "CoveringFailed"
CERT_REL_TOL = 1e-6
CONTINUITY_TOL = 1e-7
LEVEL_MARGIN = 1e-6

POINT_PRIOR_NOTE = (
    "prior has empty interior: the robust decrease cannot be strict at the equilibrium, "
    "so the optimal slack sum stays above the certification target"
)


def _fmt(x):
    return [float(v) for v in np.asarray(x).ravel()]


def _num(v):
    v = float(v)
    return None if np.isnan(v) else v


class PwaLyapunov:
    """``L(x) = g_k^T x + b_k`` on cell ``k``; ``alpha + eta * dist(x, X)`` outside."""

    def __init__(self, tess: Tessellation, G, B, alpha: float, epsilon: float, mode: str = WITH_BOUNDARY, certified: bool = False, assumptions: Optional[dict] = None):
        self.tess = tess
        self.G = np.asarray(G, dtype=float).reshape(tess.n_cells, tess.dim)
        self.B = np.asarray(B, dtype=float).reshape(tess.n_cells)
        self.alpha = float(alpha)
        self.epsilon = float(epsilon)
        self.mode = mode
        self.certified = bool(certified)
        self.assumptions = dict(assumptions or {})

    @property
    def eta(self) -> float:
        return float(np.linalg.norm(self.G, axis=1).max()) if len(self.G) else 0.0

    def vertex_values(self) -> np.ndarray:
        """Values at each cell's vertices, shape (K, n+1)."""
        P = self.tess.cell_points()
        return np.einsum("kjn,kn->kj", P, self.G) + self.B[:, None]

    def continuity_residual(self) -> float:
        vals = self.vertex_values()
        lo = np.full(self.tess.n_vertices, np.inf)
        hi = np.full(self.tess.n_vertices, -np.inf)
        np.minimum.at(lo, self.tess.cells.ravel(), vals.ravel())
        np.maximum.at(hi, self.tess.cells.ravel(), vals.ravel())
        return float((hi - lo).max())

    def check_continuity(self, tol: Optional[float] = None) -> float:
        tol = CONTINUITY_TOL * (1 + abs(self.alpha)) if tol is None else tol
        r = self.continuity_residual()
        if r > tol:
            raise ContinuityViolated(f"continuity residual {r:.3e} exceeds {tol:.1e}")
        return r

    def value_at_vertex(self, v: int) -> float:
        k = self.tess.vertex_cells()[v][0]
        return float(self.G[k] @ self.tess.points[v] + self.B[k])

    def vertex_pool_values(self) -> np.ndarray:
        return np.array([self.value_at_vertex(v) for v in range(self.tess.n_vertices)])

    def evaluate(self, x) -> np.ndarray:
        """Vectorized evaluation; NaN inside the hole (outside the tessellation)."""
        X = np.atleast_2d(np.asarray(x, dtype=float))
        scalar = np.ndim(x) == 1 and X.shape[1] == self.tess.dim and X.shape[0] == 1
        out = np.full(len(X), np.nan)
        inside = self.tess.region.contains(X)
        if np.any(~inside):
            out[~inside] = self.alpha + self.eta * self.tess.region.distance(X[~inside])
        idx = np.flatnonzero(inside)
        if len(idx):
            mem = self.tess.membership(X[idx])
            has = mem.any(axis=1)
            k = mem.argmax(axis=1)
            vals = np.einsum("mn,mn->m", X[idx], self.G[k]) + self.B[k]
            out[idx[has]] = vals[has]
        return out[0] if scalar else out

    def clarke_gradient(self, x) -> np.ndarray:
        """Generators of the Clarke gradient at ``x`` as rows."""
        x = np.asarray(x, dtype=float).reshape(-1)
        region = self.tess.region
        if not region.contains(x[None])[0]:
            d = region.distance(x[None])[0]
            # exterior is alpha + eta * dist, whose gradient is eta times the unit direction
            proj = x - d * _outward_direction(region, x)
            return (self.eta * (x - proj) / max(np.linalg.norm(x - proj), 1e-300))[None, :]
        ks = sorted(self.tess.locate(x))
        gens = [self.G[k] for k in ks]
        if self.mode == WITH_BOUNDARY and region.on_boundary(x[None])[0]:
            for k in ks:
                nrm = np.linalg.norm(self.G[k])
                if nrm > 0:
                    gens.append(self.eta * self.G[k] / nrm)
        return np.unique(np.array(gens), axis=0) if gens else np.zeros((0, self.tess.dim))

    def scaled(self, lam: float) -> "PwaLyapunov":
        return PwaLyapunov(self.tess, lam * self.G, lam * self.B, lam * self.alpha, lam * self.epsilon, self.mode, self.certified, self.assumptions)

    def to_dict(self) -> dict:
        return {
            "cells": [
                {"vertex_ids": [int(v) for v in cell], "g": _fmt(g), "b": float(b)}
                for cell, g, b in zip(self.tess.cells, self.G, self.B)
            ],
            "alpha": self.alpha,
            "eta": self.eta,
            "epsilon": self.epsilon,
            "mode": self.mode,
            "certified": self.certified,
            "assumptions": self.assumptions,
            "tessellation": self.tess.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PwaLyapunov":
        tess = Tessellation.from_dict(d["tessellation"])
        G = np.array([c["g"] for c in d["cells"]], dtype=float)
        B = np.array([c["b"] for c in d["cells"]], dtype=float)
        return cls(tess, G, B, d["alpha"], d["epsilon"], d.get("mode", WITH_BOUNDARY), d.get("certified", False), d.get("assumptions"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, s: str) -> "PwaLyapunov":
        return cls.from_dict(json.loads(s))


def _outward_direction(region: Polytope, x: np.ndarray) -> np.ndarray:
    d = region.distance(x[None])[0]
    if d == 0:
        return np.zeros_like(x)
    # numerical gradient of the distance function (it is smooth outside)
    h = 1e-7 * max(1.0, d)
    grad = np.array([(region.distance((x + h * e)[None])[0] - region.distance((x - h * e)[None])[0]) / (2 * h) for e in np.eye(len(x))])
    return grad / np.linalg.norm(grad)


@dataclass
class Certificate:
    status: str
    slack_sum: float
    target: float
    tolerance: float
    worst_slack: float
    vertex_worst_slack: List[float]
    mode: str
    assumptions: dict = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    uncovered: List[int] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "slack_sum": _num(self.slack_sum),
            "target": _num(self.target),
            "tolerance": _num(self.tolerance),
            "worst_slack": _num(self.worst_slack),
            "vertex_worst_slack": [float(v) for v in self.vertex_worst_slack],
            "mode": self.mode,
            "assumptions": self.assumptions,
            "notes": list(self.notes),
            "uncovered": [int(i) for i in self.uncovered],
        }

    @classmethod
    def covering_failed(cls, uncovered, mode, assumptions=None, notes=None) -> "Certificate":
        return cls(COVERING_FAILED, float("nan"), float("nan"), float("nan"), float("nan"), [], mode, dict(assumptions or {}), list(notes or []), list(uncovered))


def certification_target(tess: Tessellation, epsilon: float):
    total = float(tess.cell_sizes().sum())
    return -epsilon * total, CERT_REL_TOL * epsilon * total


def extract(prog: ConicProgram, sol: Solution, tess: Tessellation, assumptions: Optional[dict] = None):
    """Read ``(g_k, b_k)`` and slacks from a solution and run the certificate test."""
    if not sol.optimal:
        raise NotOptimal(f"solver status {sol.status}")
    lay = prog.layout
    parts = lay.unpack(sol.z)
    meta = prog.meta
    eps, alpha, mode = meta["epsilon"], meta["alpha"], meta["mode"]
    S = parts["s"]
    slack_sum = float(S.sum())
    target, tol = certification_target(tess, eps)
    status = CERTIFIED if abs(slack_sum - target) <= tol else NOT_CERTIFIED
    vw = np.full(tess.n_vertices, -np.inf)
    np.maximum.at(vw, tess.cells.ravel(), S.ravel())
    assumptions = dict(assumptions or {})
    L = PwaLyapunov(tess, parts["g"], parts["b"], alpha, eps, mode, status == CERTIFIED, assumptions)
    L.check_continuity()
    cert = Certificate(status, slack_sum, target, tol, float(S.max()), vw.tolist(), mode, assumptions)
    return L, cert


def decomposition_bounds(prog: ConicProgram, sol: Solution, tess: Tessellation, ds: Dataset) -> np.ndarray:
    """Robust decrease bound at every (cell, vertex) evaluated from the decomposed gradients.

    Independent of the constraint matrix: recomputes
    ``sum_i gt_i . f_i + |gt_i| * scale_ij`` directly.
    """
    lay = prog.layout
    parts = lay.unpack(sol.z)
    eta = prog.meta.get("noise_eta", 0.0)
    out = np.zeros((tess.n_cells, tess.dim + 1))
    for k, cell in enumerate(tess.cells):
        idx = lay.relevance[k]
        gt = parts["gt"][k]
        lin = (gt * ds.F[idx]).sum()
        dist = np.linalg.norm(tess.points[cell][:, None, :] - ds.X[idx][None], axis=2)
        scale = ds.M * (dist + eta) + eta if eta > 0 else ds.M * dist
        out[k] = lin + (scale * np.linalg.norm(gt, axis=1)[None, :]).sum(axis=1)
    return out


@dataclass
class RoaEstimate:
    level: float
    pieces: List[np.ndarray]
    cell_ids: List[int]
    lyapunov: PwaLyapunov = field(repr=False, default=None)
    include_prior: bool = True

    def contains(self, x) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        L = self.lyapunov
        tess = L.tess
        inside = tess.region.contains(X)
        vals = np.full(len(X), np.inf)
        if np.any(inside):
            v = L.evaluate(X[inside])
            vals[inside] = np.where(np.isnan(v), np.inf, v)
        out = inside & (vals <= self.level)
        if self.include_prior and tess.hole is not None:
            out |= tess.hole.contains(X)
        return out

    def to_dict(self) -> dict:
        return {
            "level": float(self.level),
            "pieces": [{"cell": int(k), "vertices": p.tolist()} for k, p in zip(self.cell_ids, self.pieces)],
            "include_prior": self.include_prior,
            "prior": None if self.lyapunov.tess.hole is None else self.lyapunov.tess.hole.to_dict(),
        }


def _clip_cell(P: np.ndarray, vals: np.ndarray, level: float) -> np.ndarray:
    """Vertices of ``{x in conv(P) : affine(x) <= level}`` for a simplex."""
    pts = [p for p, v in zip(P, vals) if v <= level]
    for a in range(len(P)):
        for b in range(a + 1, len(P)):
            va, vb = vals[a] - level, vals[b] - level
            if (va < 0 < vb) or (vb < 0 < va):
                t = va / (va - vb)
                pts.append(P[a] + t * (P[b] - P[a]))
    if not pts:
        return np.zeros((0, P.shape[1]))
    Q = np.array(pts)
    if Q.shape[1] == 2 and len(Q) > 2:
        c = Q.mean(axis=0)
        Q = Q[np.argsort(np.arctan2(Q[:, 1] - c[1], Q[:, 0] - c[0]))]
    elif Q.shape[1] == 1:
        Q = np.array([[Q[:, 0].min()], [Q[:, 0].max()]])
    return Q


def roa_at_level(L: PwaLyapunov, level: float) -> RoaEstimate:
    vals = L.vertex_values()
    P = L.tess.cell_points()
    pieces, ids = [], []
    for k in range(L.tess.n_cells):
        Q = _clip_cell(P[k], vals[k], level)
        if len(Q):
            pieces.append(Q)
            ids.append(k)
    return RoaEstimate(level, pieces, ids, L)


def extract_roa(L: PwaLyapunov) -> RoaEstimate:
    """Largest sublevel set strictly inside the region, by the boundary-vertex minimum."""
    tess = L.tess
    values = L.vertex_pool_values()
    bnd = tess.flags == BOUNDARY
    if not np.any(bnd):
        raise EmptyRoa("tessellation has no vertices on the region boundary")
    vmin = float(values[bnd].min())
    level = vmin - LEVEL_MARGIN * (1 + abs(vmin))
    hole = tess.flags == HOLE
    if np.any(hole) and level <= float(values[hole].min()):
        raise EmptyRoa(f"sublevel {level:.6g} does not reach the prior boundary (min {values[hole].min():.6g})")
    return roa_at_level(L, level)


@dataclass
class LearnResult:
    lyapunov: Optional[PwaLyapunov]
    certificate: Certificate
    tess: Tessellation
    program: Optional[ConicProgram] = None
    solution: Optional[Solution] = None
    report: dict = field(default_factory=dict)
    roa: Optional[RoaEstimate] = None

    def __iter__(self):
        yield self.lyapunov
        yield self.certificate

    @property
    def certified(self) -> bool:
        return self.certificate.certified


@dataclass
class LearnOptions:
    """Tessellation and solver knobs shared by the learning loops."""

    seeds: object = 32
    rng_seed: int = 0
    budget: int = 5
    settings: Optional[SolverSettings] = None
    solver: str = "builtin"


def covered_tessellation(region, prior, ds, opts: LearnOptions, extra_fixed=None):
    """Tessellate and drop uncovered seeds until covering passes.

    A zero-volume prior contributes vertices that no sample can cover (the
    velocity vanishes at the equilibrium); those are tolerated so the program
    can still be solved and reported as not certified.
    """
    seeds = opts.seeds
    if np.isscalar(seeds):
        seeds = sample_seeds(region, prior if prior is not None and prior.has_interior else None, int(seeds), opts.rng_seed)
    seeds = np.asarray(seeds, dtype=float).reshape(-1, region.dim)
    point_prior = prior is not None and not prior.has_interior
    dropped = 0
    for _ in range(opts.budget + 1):
        tess = delaunay_tessellate(region, prior, seeds, opts.rng_seed, extra_fixed)
        cov = covering_check(ds, tess)
        bad = np.asarray(cov.uncovered, dtype=np.int64)
        if point_prior:
            bad = bad[tess.flags[bad] != HOLE]
        if not len(bad):
            return tess, cov, dropped
        if np.any(tess.fixed[bad]):
            mandatory = bad[tess.fixed[bad]].tolist()
            raise CoveringFailed(f"{len(mandatory)} mandatory vertices are not covered by any sample ball", mandatory)
        drop = tess.points[bad]
        keep = np.ones(len(seeds), dtype=bool)
        for p in drop:
            keep &= np.linalg.norm(seeds - p, axis=1) > tess.tol
        dropped += int((~keep).sum())
        seeds = seeds[keep]
    raise CoveringFailed(f"{len(cov.uncovered)} vertices uncovered after {opts.budget} rounds", cov.uncovered)


def _assumptions(ds, cfg, opts, tess, extra=None):
    d = {
        "M": ds.M,
        "noise_eta": max(cfg.noise_eta, ds.noise_eta),
        "alpha": cfg.alpha,
        "epsilon": cfg.epsilon,
        "mode": cfg.mode,
        "n_samples": len(ds),
        "rng_seed": opts.rng_seed,
        "n_seeds": int(opts.seeds) if np.isscalar(opts.seeds) else int(len(opts.seeds)),
        "n_cells": tess.n_cells,
        "n_vertices": tess.n_vertices,
    }
    d.update(extra or {})
    return d


def algorithm1_learn(region: Polytope, prior: Optional[Polytope], ds: Dataset, cfg: ProgramConfig, budget: int = 5, opts: Optional[LearnOptions] = None, extra_fixed=None, pin_fn=None) -> LearnResult:
    """Tessellate, check covering, solve, and refine non-certified cells up to ``budget`` rounds.

    ``pin_fn(tess)`` may return a list of ``(vertex, value)`` pins for the tessellation.
    """
    opts = opts or LearnOptions()
    opts = LearnOptions(opts.seeds, opts.rng_seed, budget, opts.settings, opts.solver)
    tess, cov, dropped = covered_tessellation(region, prior, ds, opts, extra_fixed)
    point_prior = prior is not None and not prior.has_interior
    history = []
    result = None
    for rnd in range(budget + 1):
        pins = pin_fn(tess) if pin_fn else cfg.pinned_boundary
        stage_cfg = ProgramConfig(cfg.epsilon, cfg.alpha, cfg.mode, cfg.noise_eta, pins)
        rel = relevance_sets(ds, tess)
        prog = assemble(tess, ds, rel, stage_cfg)
        sol = solve(prog, opts.settings, opts.solver)
        extra = {"dropped_seeds": dropped, "refinement_round": rnd, "reduction_ratio": rel.reduction_ratio}
        assumptions = _assumptions(ds, stage_cfg, opts, tess, extra)
        report = {
            "covering": cov.to_dict(),
            "relevance": rel.to_dict(),
            "program": {"n_vars": prog.n_vars, "n_rows": prog.n_rows, **prog.cone_counts()},
            "solver": {"status": sol.status, "iterations": sol.iterations, "residuals": sol.residuals},
        }
        if sol.optimal:
            L, cert = extract(prog, sol, tess, assumptions)
        else:
            L = None
            target, tol = certification_target(tess, cfg.epsilon)
            cert = Certificate(NOT_CERTIFIED, float("nan"), target, tol, float("nan"), [], cfg.mode, assumptions, [f"solver returned {sol.status}"])
        if point_prior and not cert.certified:
            cert.notes.append(POINT_PRIOR_NOTE)
        history.append({"round": rnd, "status": cert.status, "slack_sum": cert.slack_sum, "n_cells": tess.n_cells})
        report["history"] = history
        result = LearnResult(L, cert, tess, prog, sol, report)
        if cert.certified or point_prior or L is None or rnd == budget:
            break
        tess, n_split = _refine_uncertified(tess, prog, sol, ds, cfg.epsilon)
        if n_split == 0:
            break
        cov = covering_check(ds, tess)
    return result


def _refine_uncertified(tess, prog, sol, ds, eps):
    S = prog.layout.unpack(sol.z)["s"]
    bad = np.flatnonzero((S > -eps + CERT_REL_TOL * eps).any(axis=1))
    centers = tess.barycenters()[bad]
    cov = covering_check(ds, None, centers)
    ok = bad[np.setdiff1d(np.arange(len(bad)), cov.uncovered)]
    for k in sorted(ok):
        tess = refine_cell(tess, int(k))
    return tess, len(ok)


def algorithm3_learn_roa(region: Polytope, prior: Optional[Polytope], ds: Dataset, cfg: ProgramConfig, budget: int = 5, opts: Optional[LearnOptions] = None, **kw) -> LearnResult:
    """No-boundary learning followed by sublevel-set extraction."""
    cfg = ProgramConfig(cfg.epsilon, cfg.alpha, NO_BOUNDARY, cfg.noise_eta, cfg.pinned_boundary)
    res = algorithm1_learn(region, prior, ds, cfg, budget, opts, **kw)
    if res.certified:
        res.roa = extract_roa(res.lyapunov)
    return res


@dataclass
class SequentialResult:
    stages: List[LearnResult]
    lyapunov: Optional[PwaLyapunov]
    certificate: Certificate
    roa: Optional[RoaEstimate] = None

    def __iter__(self):
        yield self.lyapunov
        yield self.certificate

    @property
    def certified(self) -> bool:
        return self.certificate.certified


def _check_nested(regions: Sequence[Polytope], prior: Optional[Polytope]):
    chain = ([prior] if prior is not None else []) + list(regions)
    for inner, outer in zip(chain[:-1], chain[1:]):
        if not outer.contains_polytope(inner):
            raise ValueError("region sequence is not nested")


def algorithm2_sequential(regions: Sequence[Polytope], prior: Optional[Polytope], ds: Dataset, cfg: ProgramConfig, budget: int = 5, opts: Optional[LearnOptions] = None, final_mode: Optional[str] = None) -> SequentialResult:
    """Learn stage by stage on ``X_i \\ X_{i-1}``, pinning values on each interface.

    Stage ``i`` uses level ``i * alpha`` so the pinned interface values
    (``(i-1) * alpha`` on a with-boundary predecessor) respect the interior
    rows of the next stage.
    """
    _check_nested(regions, prior)
    stages: List[LearnResult] = []
    inner = prior
    prev: Optional[PwaLyapunov] = None
    for i, region in enumerate(regions, start=1):
        mode = final_mode if (final_mode and i == len(regions)) else cfg.mode
        stage_cfg = ProgramConfig(cfg.epsilon, i * cfg.alpha, mode, cfg.noise_eta, None)
        extra_fixed = None
        pin_fn = None
        if prev is not None:
            extra_fixed = prev.tess.points[prev.tess.flags == BOUNDARY]
            pin_fn = partial(_pin_interface, prev)

        try:
            if mode == NO_BOUNDARY:
                res = algorithm3_learn_roa(region, inner, ds, stage_cfg, budget, opts, extra_fixed=extra_fixed, pin_fn=pin_fn)
            else:
                res = algorithm1_learn(region, inner, ds, stage_cfg, budget, opts, extra_fixed=extra_fixed, pin_fn=pin_fn)
        except (CoveringFailed, EmptyRoa) as exc:
            raise StageFailed(i, str(exc)) from exc
        stages.append(res)
        if not res.certified:
            raise StageFailed(i, f"stage {i} not certified (slack sum {res.certificate.slack_sum:.6g}, target {res.certificate.target:.6g})")
        prev = res.lyapunov
        inner = region
    L = stitch([s.lyapunov for s in stages], prior)
    last = stages[-1].certificate
    if len(stages) == 1:
        return SequentialResult(stages, L, last, stages[0].roa)
    cert = Certificate(
        CERTIFIED,
        float(sum(s.certificate.slack_sum for s in stages)),
        float(sum(s.certificate.target for s in stages)),
        float(sum(s.certificate.tolerance for s in stages)),
        float(max(s.certificate.worst_slack for s in stages)),
        [],
        last.mode,
        {"stages": [s.certificate.assumptions for s in stages]},
    )
    roa = stages[-1].roa
    if roa is not None:
        roa = RoaEstimate(roa.level, roa.pieces, roa.cell_ids, roa.lyapunov)
    return SequentialResult(stages, L, cert, roa)


def _pin_interface(prev: PwaLyapunov, tess: Tessellation):
    ids = np.flatnonzero(tess.flags == HOLE)
    vals = _interface_values(prev, tess.points[ids])
    return [(int(v), float(val)) for v, val in zip(ids, vals)]


def _interface_values(prev: PwaLyapunov, pts: np.ndarray) -> np.ndarray:
    # evaluate on the previous tessellation; points lie on its outer boundary
    mem = prev.tess.membership(pts)
    k = mem.argmax(axis=1)
    if not np.all(mem.any(axis=1)):
        raise ValueError("interface point outside previous stage")
    return np.einsum("mn,mn->m", pts, prev.G[k]) + prev.B[k]


def stitch(parts: Sequence[PwaLyapunov], prior: Optional[Polytope]) -> PwaLyapunov:
    """Merge per-stage functions into one on the union of their tessellations."""
    if len(parts) == 1:
        return parts[0]
    region = parts[-1].tess.region
    tol = region.tol
    pts: List[np.ndarray] = []
    kinds: List[str] = []
    cells, G, B = [], [], []
    for L in parts:
        remap = []
        for p, kd in zip(L.tess.points, L.tess.kinds):
            j = None
            if pts:
                d = np.linalg.norm(np.array(pts) - p, axis=1)
                if d.min() <= 10 * tol:
                    j = int(d.argmin())
            if j is None:
                pts.append(p)
                kinds.append(kd)
                j = len(pts) - 1
            remap.append(j)
        remap = np.array(remap)
        cells.append(np.sort(remap[L.tess.cells], axis=1))
        G.append(L.G)
        B.append(L.B)
    tess = Tessellation(np.array(pts), np.vstack(cells), region, prior, np.array(kinds, dtype=object))
    last = parts[-1]
    return PwaLyapunov(tess, np.vstack(G), np.concatenate(B), last.alpha, last.epsilon, last.mode, all(p.certified for p in parts), {"stages": [p.assumptions for p in parts]})
