"""External solver adapter: reads a problem JSON, solves with cvxpy, writes a solution JSON.

Usage: python3 external_solver_cvxpy.py PROBLEM SOLUTION [SOLVER]
"""

import json
import sys

import cvxpy as cp
import numpy as np
import scipy.sparse as sp


def main(problem_path, solution_path, solver="CLARABEL"):
    with open(problem_path) as fh:
        d = json.load(fh)
    t = d["A_triplets"]
    A = sp.csr_matrix((t["vals"], (t["rows"], t["cols"])), shape=tuple(d["shape"]))
    b = np.asarray(d["b"])
    c = np.asarray(d["c"])
    x = cp.Variable(A.shape[1])
    cons = []
    off = 0
    soc_rows = []
    for cone in d["cones"]:
        m = cone["size"]
        rows = slice(off, off + m)
        if cone["type"] == "zero":
            cons.append(A[rows] @ x == b[rows])
        elif cone["type"] == "nonneg":
            cons.append(A[rows] @ x <= b[rows])
        else:
            soc_rows.append((off, m))
        off += m
    # group same-size Lorentz blocks into one vectorized constraint
    by_size = {}
    for o, m in soc_rows:
        by_size.setdefault(m, []).append(o)
    for m, offs in by_size.items():
        offs = np.asarray(offs)
        heads = A[offs]
        S = b[offs] - heads @ x
        tails = [b[offs + j] - A[offs + j] @ x for j in range(1, m)]
        cons.append(cp.SOC(S, cp.vstack(tails), axis=0))
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    prob.solve(solver=solver)
    status = {"optimal": "Optimal", "infeasible": "Infeasible-certificate", "unbounded": "Unbounded-certificate"}.get(prob.status, "MaxIters")
    z = x.value if x.value is not None else np.zeros(A.shape[1])
    out = {"z": np.asarray(z).tolist(), "status": status}
    with open(solution_path, "w") as fh:
        json.dump(out, fh)


if __name__ == "__main__":
    main(*sys.argv[1:])
