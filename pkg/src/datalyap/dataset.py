"""Sample sets, covering tests and per-cell relevance sets."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import InconsistentData, InvalidM, ParseError
from .geometry import Tessellation

# relative slack that turns the open ball test into a closed one
COVER_TOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Samples ``(x_i, f_i)`` with a Lipschitz overestimate ``M``.

    ``noise_eta`` bounds the measurement noise on both positions and
    velocities; it only changes program assembly and the covering radius.
    """

    X: np.ndarray
    F: np.ndarray
    M: float
    noise_eta: float = 0.0

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if X.shape != F.shape:
            raise ParseError(f"positions {X.shape} and velocities {F.shape} differ in shape")
        if len(X) == 0:
            raise ParseError("dataset is empty")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(F))):
            raise ParseError("non-finite sample values")
        if not (np.isfinite(self.M) and self.M > 0):
            raise InvalidM(f"M must be positive, got {self.M}")
        if not self.noise_eta >= 0:
            raise ValueError("noise_eta must be nonnegative")
        X.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "M", float(self.M))
        object.__setattr__(self, "noise_eta", float(self.noise_eta))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return len(self.X)

    @property
    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.F, axis=1)

    @property
    def radii(self) -> np.ndarray:
        return self.speeds / self.M

    @property
    def effective_radii(self) -> np.ndarray:
        """Radius within which one sample alone can force strict decrease."""
        eta = self.noise_eta
        if eta == 0:
            return self.radii
        return np.maximum((self.speeds - eta) / self.M - eta, 0.0)

    def with_M(self, M: float) -> "Dataset":
        return Dataset(self.X, self.F, M, self.noise_eta)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.F[idx], self.M, self.noise_eta)


def _parse_rows(lines, source: str):
    rows = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ParseError(f"{source}: no header")
    reader = csv.reader(rows)
    header = [h.strip() for h in next(reader)]
    if len(header) % 2 or not header:
        raise ParseError(f"{source}: header must have 2n columns, got {len(header)}")
    n = len(header) // 2
    expected = [f"x{i}" for i in range(1, n + 1)] + [f"f{i}" for i in range(1, n + 1)]
    if header != expected:
        raise ParseError(f"{source}: header {header} != {expected}")
    data = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 2 * n:
            raise ParseError(f"{source}: row {lineno} has {len(row)} fields, expected {2 * n}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise ParseError(f"{source}: row {lineno}: {exc}") from None
    if not data:
        raise ParseError(f"{source}: no samples")
    arr = np.array(data)
    return arr[:, :n], arr[:, n:]


def load_dataset(path, M: float, noise_eta: float = 0.0) -> Dataset:
    """Read a CSV with header ``x1..xn,f1..fn``; ``#`` lines are comments."""
    if not M > 0:
        raise InvalidM(f"M must be positive, got {M}")
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        X, F = _parse_rows(fh.read().splitlines(), str(path))
    return Dataset(X, F, M, noise_eta)


def dataset_to_csv(ds: Dataset) -> str:
    n = ds.dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i}" for i in range(1, n + 1)] + [f"f{i}" for i in range(1, n + 1)])
    for x, f in zip(ds.X, ds.F):
        w.writerow([repr(float(v)) for v in np.concatenate([x, f])])
    return buf.getvalue()


def save_dataset(ds: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(ds), encoding="utf-8")


def _distances(P: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.sqrt(((P[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))


@dataclass
class CoveringResult:
    passed: bool
    uncovered: List[int]
    # per-vertex best margin r_i - |v - x_i| over samples (positive = covered)
    margins: np.ndarray

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "uncovered": [int(i) for i in self.uncovered],
            "n_vertices": int(len(self.margins)),
            "min_margin": float(self.margins.min()) if len(self.margins) else 0.0,
        }


def covering_check(ds: Dataset, tess, points: Optional[np.ndarray] = None) -> CoveringResult:
    """Every vertex needs a sample whose open ball of radius r_i contains it.

    ``tess`` can be a :class:`Tessellation` or ``None`` with explicit ``points``.
    """
    P = tess.points if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[1] != ds.dim:
        raise ValueError("dimension mismatch between dataset and tessellation")
    r = ds.effective_radii
    margins = np.empty(len(P))
    covered = np.zeros(len(P), dtype=bool)
    for s in range(0, len(P), 512):
        D = _distances(P[s : s + 512], ds.X)
        ok = (D <= r - COVER_TOL * r) & (r > 0)
        covered[s : s + 512] = ok.any(axis=1)
        margins[s : s + 512] = (r[None, :] - D).max(axis=1)
    uncovered = np.flatnonzero(~covered).tolist()
    return CoveringResult(not uncovered, uncovered, margins)


@dataclass
class RelevanceSets:
    sets: List[np.ndarray]
    n_samples: int

    def __getitem__(self, k):
        return self.sets[k]

    def __len__(self):
        return len(self.sets)

    @property
    def total(self) -> int:
        return int(sum(len(s) for s in self.sets))

    @property
    def reduction_ratio(self) -> float:
        return 1.0 - self.total / (len(self.sets) * self.n_samples)

    def to_dict(self) -> dict:
        return {
            "sizes": [int(len(s)) for s in self.sets],
            "total": self.total,
            "reduction_ratio": self.reduction_ratio,
        }


def relevance_sets(ds: Dataset, tess: Tessellation) -> RelevanceSets:
    """``i`` is relevant to cell ``k`` when some vertex of cell ``k`` is in its open ball."""
    r = ds.radii
    near = np.zeros((tess.n_vertices, len(ds)), dtype=bool)
    for s in range(0, tess.n_vertices, 512):
        near[s : s + 512] = _distances(tess.points[s : s + 512], ds.X) < r[None, :]
    sets = [np.flatnonzero(near[cell].any(axis=0)) for cell in tess.cells]
    return RelevanceSets(sets, len(ds))


def full_relevance(ds: Dataset, tess: Tessellation) -> RelevanceSets:
    """Every sample in every cell (no data refinement)."""
    return RelevanceSets([np.arange(len(ds)) for _ in range(tess.n_cells)], len(ds))


def lipschitz_floor(ds: Dataset) -> float:
    """Largest difference quotient over sample pairs; any valid M exceeds it."""
    if len(ds) < 2:
        raise ValueError("need at least two samples")
    best = 0.0
    X, F = ds.X, ds.F
    for s in range(0, len(X), 256):
        dx = _distances(X[s : s + 256], X)
        df = _distances(F[s : s + 256], F)
        same = dx == 0
        if np.any(same & (df > 0)):
            i, j = np.argwhere(same & (df > 0))[0]
            raise InconsistentData(f"samples {s + i} and {j} share x but differ in f")
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(same, 0.0, df / np.where(same, 1.0, dx))
        best = max(best, float(q.max()))
    return best
