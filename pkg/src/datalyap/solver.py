"""Conic solver: operator splitting (ADMM) on ``A x + s = b, s in K``.

The iteration follows the classic splitting with one quasi-definite KKT
factorization, over-relaxation and Ruiz equilibration. Zero rows get a
larger penalty so equality constraints converge faster. Reported duals are
``y in K*`` with ``c + A^T y = 0`` at optimality.
"""

from __future__ import annotations

import json
import logging
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ExternalSolverFailure, NotRegistered, NumericalBreakdown
from .program import NONNEG, SOC, ZERO, ConicProgram

OPTIMAL = "Optimal"
MAX_ITERS = "MaxIters"
INFEASIBLE = "Infeasible-certificate"
UNBOUNDED = "Unbounded-certificate"
STATUSES = (OPTIMAL, MAX_ITERS, INFEASIBLE, UNBOUNDED)

ENV_VAR = "DATALYAP_EXTERNAL_SOLVER"

log = logging.getLogger(__name__)


@dataclass
class SolverSettings:
    max_iters: int = 50_000
    eps_primal: float = 1e-8
    eps_dual: float = 1e-8
    eps_gap: float = 1e-8
    eps_infeasible: float = 1e-9
    over_relaxation: float = 1.6
    scaling: str = "ruiz"
    scaling_iters: int = 15
    rho: float = 0.1
    sigma: float = 1e-6
    rho_eq_factor: float = 1e3
    adaptive_rho: bool = True
    check_every: int = 25
    log_every: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("eps_primal", "eps_dual", "eps_gap", "rho", "sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.over_relaxation < 2:
            raise ValueError("over_relaxation must be in (0, 2)")
        if self.scaling not in ("none", "ruiz"):
            raise ValueError("scaling must be 'none' or 'ruiz'")


@dataclass
class Solution:
    z: np.ndarray
    y: np.ndarray
    s: np.ndarray
    status: str
    residuals: Dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    solve_time: float = 0.0
    objective: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def to_dict(self, with_time: bool = False) -> dict:
        d = {
            "z": self.z.tolist(),
            "y": self.y.tolist(),
            "s": self.s.tolist(),
            "status": self.status,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "iterations": int(self.iterations),
            "objective": float(self.objective),
        }
        if with_time:
            d["solve_time"] = self.solve_time
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        if d.get("status") not in STATUSES:
            raise ExternalSolverFailure(f"unknown status {d.get('status')!r}")
        return cls(
            np.asarray(d["z"], dtype=float),
            np.asarray(d.get("y", []), dtype=float),
            np.asarray(d.get("s", []), dtype=float),
            d["status"],
            dict(d.get("residuals", {})),
            int(d.get("iterations", 0)),
            float(d.get("solve_time", 0.0)),
            float(d.get("objective", float("nan"))),
        )


class ConeIndex:
    """Precomputed row groupings for fast projections."""

    def __init__(self, cones):
        self.zero = []
        self.nonneg = []
        soc = {}
        off = 0
        for kind, m in cones:
            rows = np.arange(off, off + m)
            if kind == ZERO:
                self.zero.append(rows)
            elif kind == NONNEG:
                self.nonneg.append(rows)
            elif kind == SOC:
                soc.setdefault(m, []).append(rows)
            else:
                raise ValueError(f"unknown cone {kind!r}")
            off += m
        self.m = off
        cat = lambda L: np.concatenate(L) if L else np.zeros(0, dtype=np.int64)
        self.zero = cat(self.zero)
        self.nonneg = cat(self.nonneg)
        self.soc = {m: np.vstack(rows) for m, rows in sorted(soc.items())}

    def project(self, v: np.ndarray) -> np.ndarray:
        out = v.copy()
        out[self.zero] = 0.0
        out[self.nonneg] = np.maximum(v[self.nonneg], 0.0)
        for idx in self.soc.values():
            out[idx] = _project_soc_rows(v[idx])
        return out

    def project_dual(self, v: np.ndarray) -> np.ndarray:
        """Projection onto K*: free on Zero rows, self-dual elsewhere."""
        out = self.project(v)
        out[self.zero] = v[self.zero]
        return out

    def soc_block_scale(self, d: np.ndarray) -> np.ndarray:
        """Replace row scales by their block mean so Lorentz cones are preserved."""
        d = d.copy()
        for idx in self.soc.values():
            d[idx] = np.exp(np.log(d[idx]).mean(axis=1))[:, None]
        return d


def _project_soc_rows(V: np.ndarray) -> np.ndarray:
    t = V[:, 0]
    u = V[:, 1:]
    nu = np.linalg.norm(u, axis=1)
    out = np.zeros_like(V)
    inside = nu <= t
    out[inside] = V[inside]
    mid = ~inside & (nu > -t)
    if np.any(mid):
        a = 0.5 * (t[mid] + nu[mid])
        out[mid, 0] = a
        out[mid, 1:] = (a / nu[mid])[:, None] * u[mid]
    return out


def project_cone(v, cone) -> np.ndarray:
    """Euclidean projection onto one cone ``(kind, size)`` or a cone list."""
    v = np.asarray(v, dtype=float)
    cones = [cone] if isinstance(cone, tuple) and isinstance(cone[0], str) else list(cone)
    ci = ConeIndex(cones)
    if ci.m != len(v):
        raise ValueError("vector length does not match cone size")
    return ci.project(v)


def _ruiz(A: sp.csc_matrix, c: np.ndarray, ci: ConeIndex, iters: int):
    m, n = A.shape
    D = np.ones(n)
    E = np.ones(m)
    As = A.copy()
    for _ in range(iters):
        col = np.sqrt(np.abs(As).max(axis=0).toarray().ravel())
        row = np.sqrt(np.abs(As).max(axis=1).toarray().ravel())
        col[col < 1e-8] = 1.0
        row[row < 1e-8] = 1.0
        row = ci.soc_block_scale(row)
        dD, dE = 1.0 / col, 1.0 / row
        As = sp.diags(dE) @ As @ sp.diags(dD)
        D *= dD
        E *= dE
    As = sp.csc_matrix(As)
    cnorm = np.abs(D * c).max() if len(c) else 1.0
    cs = 1.0 / max(cnorm, 1e-6) if cnorm > 0 else 1.0
    return As, D, E, cs


def _residuals(prog: ConicProgram, x, s, y):
    A, b, c = prog.A, prog.b, prog.c
    pr = np.linalg.norm(A @ x + s - b) / (1.0 + np.linalg.norm(b))
    dr = np.linalg.norm(c + A.T @ y) / (1.0 + np.linalg.norm(c))
    px, dy = float(c @ x), float(b @ y)
    gap = abs(px + dy) / (1.0 + abs(px) + abs(dy))
    return {"primal": float(pr), "dual": float(dr), "gap": float(gap)}


class _Workspace:
    def __init__(self, A, ci, rho_vec, sigma):
        self.A = A
        self.n = A.shape[1]
        self.factor(rho_vec, sigma)

    def factor(self, rho_vec, sigma):
        n = self.n
        K = sp.bmat(
            [[sigma * sp.eye(n, format="csc"), self.A.T], [self.A, -sp.diags(1.0 / rho_vec)]],
            format="csc",
        )
        try:
            self.lu = spla.splu(K, permc_spec="COLAMD", options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise NumericalBreakdown(f"KKT factorization failed: {exc}") from None

    def solve(self, rhs):
        return self.lu.solve(rhs)


def solve_builtin(prog: ConicProgram, settings: Optional[SolverSettings] = None) -> Solution:
    st = settings or SolverSettings()
    t0 = time.perf_counter()
    ci = ConeIndex(prog.cones)
    A0, b0, c0 = prog.A, prog.b, prog.c
    m, n = A0.shape
    if st.scaling == "ruiz":
        A, D, E, cs = _ruiz(A0, c0, ci, st.scaling_iters)
    else:
        A, D, E, cs = A0, np.ones(n), np.ones(m), 1.0
    b = E * b0
    q = cs * D * c0

    rho = st.rho
    is_zero = np.zeros(m, dtype=bool)
    is_zero[ci.zero] = True

    def rho_vector(r):
        v = np.full(m, r)
        v[is_zero] = r * st.rho_eq_factor
        return v

    rho_vec = rho_vector(rho)
    ws = _Workspace(A, ci, rho_vec, st.sigma)
    x = np.zeros(n)
    s = np.zeros(m)
    y = np.zeros(m)
    alpha = st.over_relaxation
    status = MAX_ITERS
    res = {}
    it = 0
    x_prev, y_prev = x, y
    # rho updates get rarer after each change so the iteration can settle
    adapt_every = st.check_every * 4
    next_adapt = adapt_every
    for it in range(1, st.max_iters + 1):
        rhs = np.concatenate([st.sigma * x - q, b - s + y / rho_vec])
        sol = ws.solve(rhs)
        xt, nu = sol[:n], sol[n:]
        st_ = s - (nu + y) / rho_vec
        x_new = alpha * xt + (1 - alpha) * x
        s_rel = alpha * st_ + (1 - alpha) * s
        s_new = ci.project(s_rel + y / rho_vec)
        y_new = y + rho_vec * (s_rel - s_new)
        x_prev, y_prev = x, y
        x, s, y = x_new, s_new, y_new

        if not (it % st.check_every and it != st.max_iters):
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise NumericalBreakdown(f"non-finite iterate at iteration {it}")
            xu, su, yu = D * x, s / E, -(E * y) / cs
            res = _residuals(prog, xu, su, yu)
            if st.log_every and it % st.log_every == 0:
                log.info("iter %d rho %.3g primal %.2e dual %.2e gap %.2e obj %.8g", it, rho, res["primal"], res["dual"], res["gap"], float(c0 @ xu))
            if res["primal"] <= st.eps_primal and res["dual"] <= st.eps_dual and res["gap"] <= st.eps_gap:
                status = OPTIMAL
                break
            dy = -(E * (y - y_prev)) / cs
            if _primal_infeasible(prog, ci, dy, st.eps_infeasible):
                status = INFEASIBLE
                xu, su, yu = xu, su, dy / max(-(b0 @ dy), 1e-300)
                break
            dx = D * (x - x_prev)
            if _dual_infeasible(prog, ci, dx, st.eps_infeasible):
                status = UNBOUNDED
                xu = dx / max(-(c0 @ dx), 1e-300)
                break
            if st.adaptive_rho and it >= next_adapt:
                next_adapt = it + adapt_every
                new_rho = _adapt_rho(A, b, q, x, s, y, rho)
                if new_rho > 5 * rho or new_rho < 0.2 * rho:
                    rho = float(np.clip(new_rho, 1e-6, 1e6))
                    rho_vec = rho_vector(rho)
                    ws.factor(rho_vec, st.sigma)
                    adapt_every *= 2
                    next_adapt = it + adapt_every
    xu, su, yu = (xu, su, yu) if res else (D * x, s / E, -(E * y) / cs)
    obj = float(c0 @ xu) if status in (OPTIMAL, MAX_ITERS) else float("nan")
    return Solution(xu, yu, su, status, res, it, time.perf_counter() - t0, obj)


def _adapt_rho(A, b, q, x, s, y, rho):
    Ax = A @ x
    Aty = A.T @ y
    pr = np.linalg.norm(Ax + s - b, np.inf) / max(np.linalg.norm(Ax, np.inf), np.linalg.norm(s, np.inf), np.linalg.norm(b, np.inf), 1e-12)
    dr = np.linalg.norm(q - Aty, np.inf) / max(np.linalg.norm(Aty, np.inf), np.linalg.norm(q, np.inf), 1e-12)
    if dr == 0 or pr == 0:
        return rho
    return rho * np.sqrt(pr / dr)


def _primal_infeasible(prog, ci, dy, eps) -> bool:
    # y in K*, A^T y = 0, b^T y < 0 certifies primal infeasibility
    ny = np.linalg.norm(dy)
    if ny < 1e-12:
        return False
    y = dy / ny
    if prog.b @ y >= -eps:
        return False
    if np.linalg.norm(ci.project_dual(y) - y) > 1e-6:
        return False
    return np.linalg.norm(prog.A.T @ y) <= max(eps, 1e-7) * 10


def _dual_infeasible(prog, ci, dx, eps) -> bool:
    # -A dx in K, c^T dx < 0 certifies an unbounded direction
    nx = np.linalg.norm(dx)
    if nx < 1e-12:
        return False
    d = dx / nx
    if prog.c @ d >= -eps:
        return False
    w = -(prog.A @ d)
    return np.linalg.norm(ci.project(w) - w) <= max(eps, 1e-7) * 10


_REGISTRY: Dict[str, object] = {}


def register_external_solver(name: str, command) -> None:
    """Register ``command`` (string or argv list) with ``{problem}`` and ``{solution}`` placeholders."""
    if not name or name == "builtin":
        raise ValueError("external solvers need a non-reserved name")
    if isinstance(command, str):
        command = shlex.split(command)
    if not any("{problem}" in a for a in command) or not any("{solution}" in a for a in command):
        raise ValueError("command template needs {problem} and {solution} placeholders")
    _REGISTRY[name] = list(command)


def unregister_external_solver(name: str) -> None:
    _REGISTRY.pop(name, None)


def registered_solvers() -> list:
    return ["builtin"] + sorted(_REGISTRY)


def register_from_env(name: str = "external") -> bool:
    cmd = os.environ.get(ENV_VAR)
    if not cmd:
        return False
    register_external_solver(name, cmd)
    return True


def write_problem(prog: ConicProgram, path) -> None:
    Path(path).write_text(prog.dumps(), encoding="utf-8")


def read_problem(path) -> ConicProgram:
    return ConicProgram.loads(Path(path).read_text(encoding="utf-8"))


def write_solution(sol: Solution, path) -> None:
    Path(path).write_text(json.dumps(sol.to_dict(), sort_keys=True), encoding="utf-8")


def read_solution(path) -> Solution:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return Solution.from_dict(d)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ExternalSolverFailure(f"malformed solution file: {exc}") from None


def _solve_external(prog: ConicProgram, name: str) -> Solution:
    template = _REGISTRY[name]
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="datalyap-") as tmp:
        pfile = os.path.join(tmp, "problem.json")
        sfile = os.path.join(tmp, "solution.json")
        write_problem(prog, pfile)
        argv = [a.replace("{problem}", pfile).replace("{solution}", sfile) for a in template]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except OSError as exc:
            raise ExternalSolverFailure(f"{name}: {exc}") from None
        if proc.returncode != 0:
            raise ExternalSolverFailure(f"{name} exited with {proc.returncode}: {proc.stderr.strip()[-500:]}")
        sol = read_solution(sfile)
    if sol.z.shape != (prog.n_vars,):
        raise ExternalSolverFailure(f"{name}: primal vector has wrong length")
    if len(sol.s) != prog.n_rows:
        sol.s = prog.b - prog.A @ sol.z
    if len(sol.y) != prog.n_rows:
        sol.y = np.zeros(prog.n_rows)
    if not sol.residuals:
        sol.residuals = _residuals(prog, sol.z, sol.s, sol.y)
    sol.objective = float(prog.c @ sol.z)
    sol.solve_time = time.perf_counter() - t0
    return sol


def solve(prog: ConicProgram, settings: Optional[SolverSettings] = None, solver: str = "builtin") -> Solution:
    """Solve with the built-in ADMM or a registered external command."""
    if solver == "builtin":
        return solve_builtin(prog, settings)
    if solver not in _REGISTRY:
        raise NotRegistered(f"no solver registered under {solver!r}")
    return _solve_external(prog, solver)
