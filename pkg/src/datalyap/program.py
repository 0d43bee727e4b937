"""Assembly of the Lyapunov learning problem as a standard-form conic program.

The form is ``min c^T z  s.t.  A z + s = b,  s in K`` where ``K`` is an
ordered product of Zero, NonNeg and second-order (Lorentz) cones. A Lorentz
block ``(t, u)`` means ``||u|| <= t`` with ``t`` first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .dataset import Dataset, RelevanceSets
from .errors import DimensionMismatch, EmptyRelevance
from .geometry import BOUNDARY, Tessellation

ZERO, NONNEG, SOC = "zero", "nonneg", "soc"
WITH_BOUNDARY, NO_BOUNDARY = "with_boundary", "no_boundary"


@dataclass
class ProgramConfig:
    """Knobs for :func:`assemble`.

    ``pinned_boundary`` is a list of ``(vertex_id, value)`` pairs forcing
    ``L(v) = value``; used to stitch sequential stages together.
    """

    epsilon: float = 1e-3
    alpha: float = 1.0
    mode: str = WITH_BOUNDARY
    noise_eta: float = 0.0
    pinned_boundary: Optional[List[Tuple[int, float]]] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.mode not in (WITH_BOUNDARY, NO_BOUNDARY):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.noise_eta < 0:
            raise ValueError("noise_eta must be nonnegative")


class VariableLayout:
    """Index bookkeeping for g_k, b_k, per-sample gradients, slacks and cone heads."""

    def __init__(self, n_x: int, relevance: Sequence[Sequence[int]]):
        n = n_x
        self.n_x = n
        self.relevance = [np.asarray(r, dtype=np.int64) for r in relevance]
        K = len(self.relevance)
        self.n_cells = K
        nv = n + 1
        self.g = np.arange(K * n).reshape(K, n)
        self.b = K * n + np.arange(K)
        off = K * (n + 1)
        self.gt = []
        for r in self.relevance:
            self.gt.append(off + np.arange(len(r) * n).reshape(len(r), n))
            off += len(r) * n
        self.s = off + np.arange(K * nv).reshape(K, nv)
        off += K * nv
        self.t = []
        for r in self.relevance:
            self.t.append(off + np.arange(nv * len(r)).reshape(nv, len(r)))
            off += nv * len(r)
        self.total = off

    def to_dict(self) -> dict:
        return {"n_x": self.n_x, "relevance": [r.tolist() for r in self.relevance]}

    @classmethod
    def from_dict(cls, d: dict) -> "VariableLayout":
        return cls(d["n_x"], d["relevance"])

    def unpack(self, z: np.ndarray) -> dict:
        z = np.asarray(z, dtype=float)
        return {
            "g": z[self.g],
            "b": z[self.b],
            "gt": [z[ix] for ix in self.gt],
            "s": z[self.s],
            "t": [z[ix] for ix in self.t],
        }


class _Rows:
    """Accumulates COO triplets for one cone family."""

    def __init__(self):
        self.r, self.c, self.v, self.rhs = [], [], [], []
        self.m = 0

    def add(self, cols, vals, rhs):
        cols = np.atleast_1d(np.asarray(cols, dtype=np.int64)).ravel()
        vals = np.broadcast_to(np.asarray(vals, dtype=float), cols.shape).ravel()
        self.r.append(np.full(cols.shape, self.m, dtype=np.int64))
        self.c.append(cols)
        self.v.append(vals.copy())
        self.rhs.append(float(rhs))
        self.m += 1

    def add_block(self, rows, cols, vals, rhs):
        """Bulk add: ``rows`` are local indices relative to the next free row."""
        rows = np.asarray(rows, dtype=np.int64)
        rhs = np.asarray(rhs, dtype=float)
        self.r.append(self.m + rows)
        self.c.append(np.asarray(cols, dtype=np.int64))
        self.v.append(np.asarray(vals, dtype=float))
        self.rhs.extend(rhs.tolist())
        self.m += len(rhs)

    def arrays(self):
        if not self.r:
            z = np.zeros(0, dtype=np.int64)
            return z, z, np.zeros(0), np.zeros(0)
        return np.concatenate(self.r), np.concatenate(self.c), np.concatenate(self.v), np.array(self.rhs)


@dataclass
class ConicProgram:
    """``min c^T z`` subject to ``A z + s = b``, ``s`` in the cone product."""

    A: sp.csc_matrix
    b: np.ndarray
    c: np.ndarray
    cones: List[Tuple[str, int]]
    layout: Optional[VariableLayout] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = sp.csc_matrix(self.A)
        self.b = np.asarray(self.b, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.cones = [(str(k), int(m)) for k, m in self.cones]
        m, n = self.A.shape
        if sum(sz for _, sz in self.cones) != m or len(self.b) != m:
            raise ValueError("cone sizes do not add up to the number of rows")
        if len(self.c) != n:
            raise ValueError("objective length does not match the number of variables")
        for kind, sz in self.cones:
            if kind not in (ZERO, NONNEG, SOC):
                raise ValueError(f"unknown cone {kind!r}")
            if kind == SOC and sz < 2:
                raise ValueError("second-order blocks need size >= 2")

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def cone_counts(self) -> dict:
        out = {ZERO: 0, NONNEG: 0, SOC: 0, "n_soc_blocks": 0}
        for kind, sz in self.cones:
            out[kind] += sz
            out["n_soc_blocks"] += kind == SOC
        return out

    def to_dict(self) -> dict:
        coo = self.A.tocoo()
        order = np.lexsort((coo.row, coo.col))
        d = {
            "shape": [int(self.A.shape[0]), int(self.A.shape[1])],
            "A_triplets": {
                "rows": coo.row[order].tolist(),
                "cols": coo.col[order].tolist(),
                "vals": coo.data[order].tolist(),
            },
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "cones": [{"type": k, "size": m} for k, m in self.cones],
            "meta": _jsonable(self.meta),
        }
        if self.layout is not None:
            d["layout"] = self.layout.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConicProgram":
        t = d["A_triplets"]
        A = sp.csc_matrix(
            (np.asarray(t["vals"], dtype=float), (np.asarray(t["rows"], dtype=np.int64), np.asarray(t["cols"], dtype=np.int64))),
            shape=tuple(d["shape"]),
        )
        layout = VariableLayout.from_dict(d["layout"]) if d.get("layout") else None
        return cls(A, d["b"], d["c"], [(c["type"], c["size"]) for c in d["cones"]], layout, d.get("meta", {}))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, s: str) -> "ConicProgram":
        return cls.from_dict(json.loads(s))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def continuity_pairs(tess: Tessellation) -> List[Tuple[int, int, int]]:
    """``(k0, l, v)`` for each vertex ``v`` and each non-lowest cell ``l`` around it."""
    out = []
    for v, cells in enumerate(tess.vertex_cells()):
        if len(cells) < 2:
            continue
        cells = sorted(cells)
        for l in cells[1:]:
            out.append((cells[0], l, v))
    return out


def assemble(tess: Tessellation, ds: Dataset, rel: RelevanceSets, cfg: ProgramConfig) -> ConicProgram:
    """Build the robust learning program for a tessellation and dataset."""
    n = tess.dim
    if ds.dim != n:
        raise DimensionMismatch(f"dataset dimension {ds.dim} != tessellation dimension {n}")
    if len(rel) != tess.n_cells:
        raise DimensionMismatch("relevance sets do not match the number of cells")
    empty = [k for k in range(tess.n_cells) if len(rel[k]) == 0]
    if empty:
        raise EmptyRelevance(f"cells without relevant samples: {empty[:10]}")
    lay = VariableLayout(n, rel.sets)
    eps, alpha, eta = cfg.epsilon, cfg.alpha, max(cfg.noise_eta, ds.noise_eta)
    P = tess.points
    zero, nonneg = _Rows(), _Rows()
    soc_r, soc_c, soc_v = [], [], []
    soc_blocks = 0

    for k0, l, v in continuity_pairs(tess):
        x = P[v]
        cols = np.concatenate([lay.g[k0], [lay.b[k0]], lay.g[l], [lay.b[l]]])
        vals = np.concatenate([x, [1.0], -x, [-1.0]])
        zero.add(cols, vals, 0.0)

    for k, cell in enumerate(tess.cells):
        for v in cell:
            if tess.flags[v] == BOUNDARY:
                if cfg.mode == WITH_BOUNDARY:
                    zero.add(np.append(lay.g[k], lay.b[k]), np.append(P[v], 1.0), alpha)
            else:
                nonneg.add(np.append(lay.g[k], lay.b[k]), np.append(P[v], 1.0), alpha - eps)

    for k in range(tess.n_cells):
        for d in range(n):
            zero.add(np.append(lay.gt[k][:, d], lay.g[k, d]), np.append(np.ones(len(rel[k])), -1.0), 0.0)

    if cfg.pinned_boundary:
        vc = tess.vertex_cells()
        for v, value in cfg.pinned_boundary:
            k = min(vc[int(v)])
            zero.add(np.append(lay.g[k], lay.b[k]), np.append(P[int(v)], 1.0), value)

    nonneg.add_block(np.arange(lay.s.size), lay.s.ravel(), -np.ones(lay.s.size), np.full(lay.s.size, eps))

    F = ds.F
    for k, cell in enumerate(tess.cells):
        idx = rel[k]
        m = len(idx)
        gt = lay.gt[k]
        for j, v in enumerate(cell):
            # sum_i gt_i . f_i + t_ij - s_j <= 0
            cols = np.concatenate([gt.ravel(), lay.t[k][j], [lay.s[k, j]]])
            vals = np.concatenate([F[idx].ravel(), np.ones(m), [-1.0]])
            nonneg.add(cols, vals, 0.0)
        dist = np.linalg.norm(P[cell][:, None, :] - ds.X[idx][None, :, :], axis=2)
        scale = ds.M * (dist + eta) + eta if eta > 0 else ds.M * dist
        # one Lorentz block per (vertex, sample): rows [t, scale * gt_i]
        nv = len(cell)
        base = (soc_blocks + np.arange(nv * m)) * (n + 1)
        soc_r.append(base)
        soc_c.append(lay.t[k].ravel())
        soc_v.append(-np.ones(nv * m))
        rows = base[:, None] + 1 + np.arange(n)[None, :]
        cols = np.broadcast_to(gt[None, :, :], (nv, m, n)).reshape(nv * m, n)
        soc_r.append(rows.ravel())
        soc_c.append(cols.ravel())
        soc_v.append(np.repeat(-scale.ravel(), n))
        soc_blocks += nv * m

    zr, zc, zv, zb = zero.arrays()
    nr, nc, nvals, nb = nonneg.arrays()
    m0, m1 = zero.m, nonneg.m
    ms = soc_blocks * (n + 1)
    rows = np.concatenate([zr, m0 + nr] + [m0 + m1 + r for r in soc_r])
    cols = np.concatenate([zc, nc] + soc_c)
    vals = np.concatenate([zv, nvals] + soc_v)
    A = sp.csc_matrix((vals, (rows, cols)), shape=(m0 + m1 + ms, lay.total))
    A.sum_duplicates()
    b = np.concatenate([zb, nb, np.zeros(ms)])
    c = np.zeros(lay.total)
    c[lay.s.ravel()] = 1.0
    cones = []
    if m0:
        cones.append((ZERO, m0))
    if m1:
        cones.append((NONNEG, m1))
    cones += [(SOC, n + 1)] * soc_blocks
    meta = {
        "alpha": alpha,
        "epsilon": eps,
        "mode": cfg.mode,
        "noise_eta": eta,
        "M": ds.M,
        "n_cells": tess.n_cells,
        "vertex_rows": int(sum(len(c_) for c_ in tess.cells)),
        "pinned": [[int(v), float(val)] for v, val in (cfg.pinned_boundary or [])],
        "reduction_ratio": rel.reduction_ratio,
    }
    return ConicProgram(A, b, c, cones, lay, meta)


def scale_invariance_transform(prog: ConicProgram, lam: float) -> ConicProgram:
    """Program for level ``lam * alpha`` and tolerance ``lam * epsilon``.

    Every right-hand side is linear in (alpha, epsilon, pinned values), so the
    transformed feasible set is exactly ``lam`` times the original one,
    including the slacks.
    """
    if not lam > 0:
        raise ValueError("scale factor must be positive")
    meta = dict(prog.meta)
    for key in ("alpha", "epsilon"):
        if key in meta:
            meta[key] = lam * meta[key]
    if "pinned" in meta:
        meta["pinned"] = [[v, lam * val] for v, val in meta["pinned"]]
    return ConicProgram(prog.A.copy(), lam * prog.b, prog.c.copy(), list(prog.cones), prog.layout, meta)
