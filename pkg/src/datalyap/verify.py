"""Ground-truth checks against known dynamics: grid negativity and trajectories."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .dataset import Dataset
from .errors import NumericalBlowup
from .geometry import Polytope
from .lyapunov import PwaLyapunov, RoaEstimate

CONVERGED, ESCAPED, TIMEOUT = "Converged", "Escaped", "Timeout"
M_SAFETY = 1.2


def linear_stable(x):
    return -np.asarray(x, dtype=float)


def nonpolynomial(x):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    d1 = -0.9 * np.sin(x1) * np.cos(x2) + 0.2 * x1 * x2 + 0.25 * x2**2
    d2 = -np.sin(x2) * np.abs(x1 + 0.2) + 0.5 * x1 * x2 / (np.cos(x2) - 0.3 * x1)
    return np.stack([d1, d2], axis=-1)


def reverse_van_der_pol(x):
    """Reverse-time Van der Pol; the origin is a stable focus inside an unstable limit cycle."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([-2.0 * x2, 0.8 * x1 + 10.0 * (x1**2 - 0.21) * x2], axis=-1)


def reverse_van_der_pol_as_printed(x):
    """Sign variant with a saddle at the origin; kept for comparison only."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([-2.0 * x2, -0.8 * x1 - 10.0 * (x1**2 - 0.21) * x2], axis=-1)


def _check_nonpoly_region(region: Polytope):
    lo, hi = region.bounding_box()
    g1 = np.linspace(lo[0], hi[0], 400)
    g2 = np.linspace(lo[1], hi[1], 400)
    X1, X2 = np.meshgrid(g1, g2, indexing="ij")
    den = np.abs(np.cos(X2) - 0.3 * X1)
    if den.min() < 0.1:
        raise ValueError(f"denominator gets within {den.min():.3g} of zero on this region")


@dataclass
class OracleDynamics:
    name: str
    dim: int
    rhs: Callable[[np.ndarray], np.ndarray]
    region_check: Optional[Callable[[Polytope], None]] = None

    def __call__(self, x):
        return self.rhs(x)

    def check_region(self, region: Polytope) -> None:
        if region.dim != self.dim:
            raise ValueError(f"oracle {self.name} is {self.dim}-D, region is {region.dim}-D")
        if self.region_check is not None:
            self.region_check(region)
        lo, hi = region.bounding_box()
        probe = np.random.default_rng(0).uniform(lo, hi, size=(1000, self.dim))
        if not np.all(np.isfinite(self.rhs(probe))):
            raise ValueError(f"oracle {self.name} is not finite on the region")

    def lipschitz_floor(self, region: Polytope, resolution: int = 401) -> float:
        return probe_lipschitz(self.rhs, region, resolution)


ORACLES: Dict[str, OracleDynamics] = {
    "linear": OracleDynamics("linear", 2, linear_stable),
    "linear1d": OracleDynamics("linear1d", 1, linear_stable),
    "nonpoly": OracleDynamics("nonpoly", 2, nonpolynomial, _check_nonpoly_region),
    "vdp": OracleDynamics("vdp", 2, reverse_van_der_pol),
    "vdp_printed": OracleDynamics("vdp_printed", 2, reverse_van_der_pol_as_printed),
}


def get_oracle(name: str) -> OracleDynamics:
    try:
        return ORACLES[name]
    except KeyError:
        raise KeyError(f"unknown oracle {name!r}; choose from {sorted(ORACLES)}") from None


def probe_lipschitz(f, region: Polytope, resolution: int = 401) -> float:
    """Largest finite-difference Jacobian spectral norm on a grid over the region's box."""
    lo, hi = region.bounding_box()
    n = region.dim
    if n == 1:
        g = np.linspace(lo[0], hi[0], resolution)[:, None]
        F = f(g)
        return float((np.linalg.norm(np.diff(F, axis=0), axis=1) / np.diff(g[:, 0])).max())
    if n == 2:
        g1 = np.linspace(lo[0], hi[0], resolution)
        g2 = np.linspace(lo[1], hi[1], resolution)
        P = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1)
        F = f(P)
        J = np.empty((resolution - 1, resolution - 1, 2, 2))
        J[..., :, 0] = (F[1:, :-1] - F[:-1, :-1]) / (g1[1] - g1[0])
        J[..., :, 1] = (F[:-1, 1:] - F[:-1, :-1]) / (g2[1] - g2[0])
        return float(np.linalg.norm(J, ord=2, axis=(-2, -1)).max())
    # higher dimensions: random pairs
    rng = np.random.default_rng(0)
    X = rng.uniform(lo, hi, size=(20000, n))
    Y = X + rng.normal(scale=1e-4 * (hi - lo).max(), size=X.shape)
    return float((np.linalg.norm(f(X) - f(Y), axis=1) / np.linalg.norm(X - Y, axis=1)).max())


def generate_dataset(oracle: OracleDynamics, region: Polytope, n: int, seed: int, M: Optional[float] = None, noise_eta: float = 0.0, probe_resolution: int = 401):
    """Uniform i.i.d. samples in the region; ``M`` defaults to 1.2 times the probe floor.

    Returns ``(dataset, info)`` where ``info`` records how ``M`` was chosen.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    oracle.check_region(region)
    rng = np.random.default_rng(seed)
    lo, hi = region.bounding_box()
    X = np.empty((0, region.dim))
    while len(X) < n:
        cand = rng.uniform(lo, hi, size=(2 * n, region.dim))
        X = np.vstack([X, cand[region.contains(cand, tol=0.0)]])
    X = X[:n]
    F = oracle(X)
    floor = oracle.lipschitz_floor(region, probe_resolution)
    info = {"oracle": oracle.name, "n": n, "seed": seed, "probe_lipschitz": floor, "M_source": "given" if M else f"{M_SAFETY} x probe floor"}
    if M is None:
        M = M_SAFETY * floor
    info["M"] = float(M)
    return Dataset(X, F, M, noise_eta), info


@dataclass
class SimResult:
    outcome: str
    t: float
    x_final: np.ndarray

    def to_dict(self):
        return {"outcome": self.outcome, "t": float(self.t), "x_final": self.x_final.tolist()}


def simulate_many(oracle, X0, dt: float = 0.01, t_max: float = 50.0, ball_radius: float = 0.05, region: Optional[Polytope] = None):
    """Batched fixed-step RK4; returns outcome codes and stopping times per start point."""
    if not dt < t_max:
        raise ValueError("dt must be smaller than t_max")
    X = np.array(X0, dtype=float, ndmin=2)
    m = len(X)
    outcome = np.array([TIMEOUT] * m, dtype=object)
    t_stop = np.full(m, t_max)
    if region is not None:
        lo, hi = region.bounding_box()
        c, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        esc_lo, esc_hi = c - 2 * half, c + 2 * half
    active = np.ones(m, dtype=bool)
    steps = int(round(t_max / dt))
    for step in range(steps + 1):
        t = step * dt
        conv = active & (np.linalg.norm(X, axis=1) <= ball_radius)
        outcome[conv] = CONVERGED
        t_stop[conv] = t
        active &= ~conv
        if region is not None:
            esc = active & np.any((X < esc_lo) | (X > esc_hi), axis=1)
            outcome[esc] = ESCAPED
            t_stop[esc] = t
            active &= ~esc
        if not active.any() or step == steps:
            break
        Y = X[active]
        k1 = oracle(Y)
        k2 = oracle(Y + 0.5 * dt * k1)
        k3 = oracle(Y + 0.5 * dt * k2)
        k4 = oracle(Y + dt * k3)
        Y = Y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(Y)):
            raise NumericalBlowup(f"non-finite state at t={t + dt:.4g}")
        X[active] = Y
    return outcome, t_stop, X


def simulate(oracle, x0, dt: float = 0.01, t_max: float = 50.0, ball_radius: float = 0.05, region: Optional[Polytope] = None) -> SimResult:
    out, t, X = simulate_many(oracle, [x0], dt, t_max, ball_radius, region)
    return SimResult(out[0], float(t[0]), X[0])


@dataclass
class VerificationReport:
    grid_max: float = float("nan")
    grid_argmax: Optional[list] = None
    grid_points: int = 0
    resolution: int = 0
    trajectories: Dict[str, int] = field(default_factory=dict)
    escaped_starts: list = field(default_factory=list)
    diagnosis: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        grid_ok = not self.grid_points or self.grid_max < 0
        return grid_ok and self.trajectories.get(ESCAPED, 0) == 0

    def to_dict(self) -> dict:
        return {
            "grid_max": None if np.isnan(self.grid_max) else float(self.grid_max),
            "grid_argmax": self.grid_argmax,
            "grid_points": int(self.grid_points),
            "resolution": int(self.resolution),
            "trajectories": {k: int(v) for k, v in sorted(self.trajectories.items())},
            "escaped_starts": self.escaped_starts,
            "diagnosis": self.diagnosis,
            "passed": self.passed,
            **self.extra,
        }


def grid_points_in_roa(L: PwaLyapunov, roa: Optional[RoaEstimate], resolution: int, exclude_prior: bool = True) -> np.ndarray:
    lo, hi = L.tess.region.bounding_box()
    axes = [np.linspace(a, b, resolution) for a, b in zip(lo, hi)]
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, L.tess.dim)
    keep = L.tess.region.contains(P)
    if roa is not None:
        keep &= roa.contains(P)
    hole = L.tess.hole
    if exclude_prior and hole is not None and hole.has_interior:
        keep &= ~hole.contains(P, tol=0.0)
    return P[keep]


def max_generator_product(L: PwaLyapunov, X: np.ndarray, F: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """``max_{k in K(x)} f(x)^T g_k`` per point (NaN where no cell contains x)."""
    out = np.full(len(X), np.nan)
    for s in range(0, len(X), chunk):
        mem = L.tess.membership(X[s : s + chunk])
        prod = F[s : s + chunk] @ L.G.T
        prod = np.where(mem, prod, -np.inf)
        best = prod.max(axis=1)
        out[s : s + chunk] = np.where(np.isfinite(best), best, np.nan)
    return out


def grid_negativity(L: PwaLyapunov, roa: Optional[RoaEstimate], oracle, resolution: int = 200) -> VerificationReport:
    """Max of ``f(x)^T y`` over Clarke generators on a grid of the RoA minus the prior."""
    X = grid_points_in_roa(L, roa, resolution)
    rep = VerificationReport(resolution=resolution)
    if not len(X):
        return rep
    vals = max_generator_product(L, X, oracle(X))
    ok = ~np.isnan(vals)
    X, vals = X[ok], vals[ok]
    rep.grid_points = int(len(X))
    if len(X):
        i = int(np.argmax(vals))
        rep.grid_max = float(vals[i])
        rep.grid_argmax = X[i].tolist()
    rep.extra["_grid"] = (X, vals)
    return rep


def grid_csv(rep: VerificationReport) -> str:
    X, vals = rep.extra.get("_grid", (np.zeros((0, 2)), np.zeros(0)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(X.shape[1])] + ["max_fg"])
    for x, v in zip(X, vals):
        w.writerow([repr(float(a)) for a in x] + [repr(float(v))])
    return buf.getvalue()


def sample_in_roa(roa: RoaEstimate, n: int, seed: int) -> np.ndarray:
    region = roa.lyapunov.tess.region
    lo, hi = region.bounding_box()
    rng = np.random.default_rng(seed)
    out = np.empty((0, region.dim))
    for _ in range(1000):
        if len(out) >= n:
            break
        cand = rng.uniform(lo, hi, size=(max(4 * n, 64), region.dim))
        out = np.vstack([out, cand[roa.contains(cand)]])
    if len(out) < n:
        raise ValueError("region of attraction estimate is too small to sample")
    return out[:n]


def roa_soundness(L: PwaLyapunov, roa: RoaEstimate, oracle, n_trajectories: int = 200, seed: int = 0, dt: float = 0.01, t_max: float = 50.0, ball_radius: float = 0.05, M: Optional[float] = None) -> VerificationReport:
    """Simulate from uniform RoA starts; any escape is flagged with a diagnosis."""
    X0 = sample_in_roa(roa, n_trajectories, seed)
    out, t, _ = simulate_many(oracle, X0, dt, t_max, ball_radius, L.tess.region)
    counts = {k: int((out == k).sum()) for k in (CONVERGED, ESCAPED, TIMEOUT)}
    rep = VerificationReport(trajectories=counts)
    rep.escaped_starts = X0[out == ESCAPED].tolist()
    M = L.assumptions.get("M") if M is None else M
    floor = probe_lipschitz(oracle, L.tess.region)
    rep.extra["probe_lipschitz"] = floor
    rep.extra["M"] = M
    if counts[ESCAPED]:
        if M is not None and M < floor:
            rep.diagnosis = f"M={M:.4g} is below the probed Lipschitz constant {floor:.4g}; the data assumption is violated"
        else:
            rep.diagnosis = "escape despite a valid M: implementation error"
    return rep
