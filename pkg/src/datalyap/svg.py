"""Minimal SVG output for 2-D tessellations, level sets and grid data."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

SIZE = 480
PAD = 20


class _Canvas:
    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        span = np.asarray(hi, dtype=float) - self.lo
        self.scale = (SIZE - 2 * PAD) / max(span.max(), 1e-12)
        self.items = []

    def xy(self, p):
        x = PAD + (p[0] - self.lo[0]) * self.scale
        y = SIZE - PAD - (p[1] - self.lo[1]) * self.scale
        return f"{x:.2f},{y:.2f}"

    def polygon(self, P, fill="none", stroke="#444", width=0.5):
        pts = " ".join(self.xy(p) for p in P)
        self.items.append(f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>')

    def line(self, a, b, stroke="#000", width=1.0):
        (x1, y1), (x2, y2) = self.xy(a).split(","), self.xy(b).split(",")
        self.items.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{stroke}" stroke-width="{width}"/>')

    def circle(self, p, r=1.5, fill="#000"):
        x, y = self.xy(p).split(",")
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{r}" fill="{fill}"/>')

    def rect(self, p, w, h, fill):
        x, y = self.xy((p[0], p[1] + h)).split(",")
        self.items.append(f'<rect x="{x}" y="{y}" width="{w * self.scale:.2f}" height="{h * self.scale:.2f}" fill="{fill}"/>')

    def render(self, title: str = "") -> str:
        head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">'
        body = [head, '<rect width="100%" height="100%" fill="white"/>']
        if title:
            body.append(f'<text x="{PAD}" y="{PAD - 6}" font-size="12" font-family="sans-serif">{title}</text>')
        return "\n".join(body + self.items + ["</svg>", ""])


def _canvas_for(tess) -> _Canvas:
    lo, hi = tess.region.bounding_box()
    return _Canvas(lo, hi)


def tessellation_svg(tess, samples: Optional[np.ndarray] = None) -> str:
    c = _canvas_for(tess)
    for cell in tess.cells:
        c.polygon(tess.points[cell])
    if samples is not None:
        for x in samples:
            c.circle(x, 1.2, "#c33")
    for p in tess.points:
        c.circle(p, 1.0, "#333")
    return c.render(f"{tess.n_cells} cells, {tess.n_vertices} vertices")


def _level_segments(P, vals, level):
    pts = []
    for a in range(3):
        b = (a + 1) % 3
        va, vb = vals[a] - level, vals[b] - level
        if (va <= 0 < vb) or (vb <= 0 < va):
            t = va / (va - vb)
            pts.append(P[a] + t * (P[b] - P[a]))
    return pts if len(pts) == 2 else None


def level_sets_svg(L, levels: Iterable[float]) -> str:
    c = _canvas_for(L.tess)
    for cell in L.tess.cells:
        c.polygon(L.tess.points[cell], stroke="#ccc", width=0.3)
    vals = L.vertex_values()
    P = L.tess.cell_points()
    for level in levels:
        for k in range(L.tess.n_cells):
            seg = _level_segments(P[k], vals[k], level)
            if seg:
                c.line(seg[0], seg[1], "#1f5fa8", 0.8)
    return c.render("level sets")


def roa_svg(roa) -> str:
    L = roa.lyapunov
    c = _canvas_for(L.tess)
    c.polygon(L.tess.region.vertices[_hull_order(L.tess.region.vertices)], stroke="#000", width=1.0)
    for P in roa.pieces:
        if len(P) >= 3:
            c.polygon(P, fill="#9cd39c", stroke="none", width=0)
    vals = L.vertex_values()
    Pc = L.tess.cell_points()
    for k in range(L.tess.n_cells):
        seg = _level_segments(Pc[k], vals[k], roa.level)
        if seg:
            c.line(seg[0], seg[1], "#185c18", 1.2)
    hole = L.tess.hole
    if hole is not None and hole.has_interior:
        c.polygon(hole.vertices[_hull_order(hole.vertices)], fill="#eee", stroke="#000")
    return c.render(f"sublevel set at {roa.level:.4g}")


def heat_svg(tess, X: np.ndarray, vals: np.ndarray, resolution: int) -> str:
    c = _canvas_for(tess)
    lo, hi = tess.region.bounding_box()
    h = (hi - lo) / max(resolution - 1, 1)
    vmax = max(float(np.abs(vals).max()) if len(vals) else 1.0, 1e-12)
    for x, v in zip(X, vals):
        r = float(np.clip(v / vmax, -1, 1))
        if r < 0:
            col = f"rgb({int(255 * (1 + r))},{int(255 * (1 + r))},255)"
        else:
            col = f"rgb(255,{int(255 * (1 - r))},{int(255 * (1 - r))})"
        c.rect(x - h / 2, h[0], h[1], col)
    return c.render("max f(x)^T g over Clarke generators")


def _hull_order(V):
    ctr = V.mean(axis=0)
    return np.argsort(np.arctan2(V[:, 1] - ctr[1], V[:, 0] - ctr[0]))
