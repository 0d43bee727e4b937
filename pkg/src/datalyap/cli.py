"""Command-line entry point.

Every command reads an optional JSON config (``--config``); flags override
the matching config fields. Exit codes: 0 success, 1 config or I/O error,
2 certification or verification failure, 3 covering failure, 4 stage failure.

An external conic solver can be supplied through the environment variable
``DATALYAP_EXTERNAL_SOLVER`` holding a command template with ``{problem}``
and ``{solution}`` placeholders; select it with ``--solver external``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import svg
from .dataset import load_dataset, relevance_sets, save_dataset
from .errors import CoveringFailed, DatalyapError, EmptyRoa, StageFailed
from .geometry import Polytope
from .lyapunov import (
    COVERING_FAILED,
    Certificate,
    LearnOptions,
    PwaLyapunov,
    covered_tessellation,
    algorithm1_learn,
    algorithm2_sequential,
    algorithm3_learn_roa,
    extract_roa,
    roa_at_level,
)
from .program import NO_BOUNDARY, WITH_BOUNDARY, ProgramConfig, assemble
from .solver import ENV_VAR, SolverSettings, register_from_env, write_problem
from .verify import generate_dataset, get_oracle, grid_csv, grid_negativity, roa_soundness

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_COVER, EXIT_STAGE = 0, 1, 2, 3, 4

DEFAULTS = {
    "region": None,
    "prior": None,
    "regions": None,
    "final_mode": None,
    "dataset": None,
    "oracle": None,
    "M": None,
    "M_scale": 1.0,
    "noise_eta": 0.0,
    "epsilon": 1e-3,
    "alpha": 1.0,
    "mode": WITH_BOUNDARY,
    "n_seeds": 32,
    "rng_seed": 0,
    "budget": 5,
    "solver": "builtin",
    "solver_settings": {},
    "output": "out",
    "plots": True,
    "verify": {},
}

# flag name -> (config key, type)
OVERRIDES = {
    "dataset": str,
    "M": float,
    "M_scale": float,
    "noise_eta": float,
    "epsilon": float,
    "alpha": float,
    "mode": str,
    "n_seeds": int,
    "rng_seed": int,
    "budget": int,
    "solver": str,
    "output": str,
    "final_mode": str,
}
JSON_OVERRIDES = ("region", "prior", "regions", "oracle", "solver_settings", "verify")


class ConfigError(Exception):
    pass


def parse_polytope(spec) -> Polytope:
    """``{"box": [lo, hi]}``, ``{"cube": h, "dim": n}``, ``{"point": x}`` or ``{"A", "b"}``."""
    if spec is None:
        return None
    if isinstance(spec, Polytope):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError(f"polytope spec must be an object, got {spec!r}")
    if "box" in spec:
        lo, hi = spec["box"]
        return Polytope.box(lo, hi)
    if "cube" in spec:
        return Polytope.cube(float(spec["cube"]), int(spec.get("dim", 2)))
    if "point" in spec:
        return Polytope.point(spec["point"])
    if "A" in spec and "b" in spec:
        return Polytope(spec["A"], spec["b"], spec.get("vertices"))
    if "vertices" in spec:
        return Polytope.from_vertices(spec["vertices"])
    raise ConfigError(f"unrecognised polytope spec {spec!r}")


def load_config(args) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                user = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        unknown = set(user) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        cfg.update(user)
    for key, typ in OVERRIDES.items():
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = typ(val)
    for key in JSON_OVERRIDES:
        val = getattr(args, key, None)
        if val is not None:
            try:
                cfg[key] = json.loads(val)
            except ValueError as exc:
                raise ConfigError(f"--{key.replace('_', '-')} is not valid JSON: {exc}") from None
    if not cfg["epsilon"] > 0:
        raise ConfigError("epsilon must be positive")
    if cfg["mode"] not in (WITH_BOUNDARY, NO_BOUNDARY):
        raise ConfigError(f"mode must be {WITH_BOUNDARY} or {NO_BOUNDARY}")
    if (cfg["dataset"] is None) == (cfg["oracle"] is None):
        raise ConfigError("set exactly one of 'dataset' and 'oracle'")
    return cfg


def build_dataset(cfg: dict):
    """Returns ``(dataset, info)`` and applies ``M_scale``."""
    if cfg["dataset"] is not None:
        if cfg["M"] is None:
            raise ConfigError("a CSV dataset needs an explicit M")
        M = float(cfg["M"]) * float(cfg["M_scale"])
        ds = load_dataset(cfg["dataset"], M, cfg["noise_eta"])
        return ds, {"source": str(cfg["dataset"]), "M": M, "M_scale": cfg["M_scale"]}
    o = cfg["oracle"]
    if not isinstance(o, dict) or "name" not in o:
        raise ConfigError("oracle must be an object with at least 'name'")
    oracle = get_oracle(o["name"])
    sample_region = parse_polytope(o.get("region", cfg["region"]))
    ds, info = generate_dataset(oracle, sample_region, int(o.get("n", 200)), int(o.get("seed", 0)), cfg["M"], cfg["noise_eta"])
    if cfg["M_scale"] != 1.0:
        ds = ds.with_M(ds.M * float(cfg["M_scale"]))
        info["M"] = ds.M
    info["M_scale"] = cfg["M_scale"]
    return ds, info


def _program_config(cfg, mode=None) -> ProgramConfig:
    return ProgramConfig(cfg["epsilon"], cfg["alpha"], mode or cfg["mode"], cfg["noise_eta"])


def _options(cfg) -> LearnOptions:
    name = cfg["solver"]
    if name == "external" and not register_from_env():
        raise ConfigError(f"solver 'external' needs {ENV_VAR} to be set")
    try:
        settings = SolverSettings(**cfg["solver_settings"])
    except TypeError as exc:
        raise ConfigError(f"bad solver_settings: {exc}") from None
    return LearnOptions(cfg["n_seeds"], cfg["rng_seed"], cfg["budget"], settings, name)


def _regions(cfg):
    region = parse_polytope(cfg["region"])
    if region is None:
        raise ConfigError("config needs a 'region'")
    prior = parse_polytope(cfg["prior"])
    if prior is not None and not region.contains_polytope(prior):
        raise ConfigError("prior is not contained in the region")
    return region, prior


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit_learn_artifacts(out: Path, res, ds_info, cfg, ds=None):
    cert = res.certificate
    _write_json(out / "certificate.json", cert.to_dict())
    report = {"dataset": ds_info, "config": _public_config(cfg), "status": cert.status, "notes": cert.notes}
    report.update(getattr(res, "report", {}) or {})
    if res.lyapunov is not None:
        _write_json(out / "lyapunov.json", res.lyapunov.to_dict())
    roa = res.roa
    if roa is None and res.lyapunov is not None and res.certified:
        try:
            roa = extract_roa(res.lyapunov)
        except EmptyRoa as exc:
            report["roa_error"] = str(exc)
    if roa is not None:
        _write_json(out / "roa.json", roa.to_dict())
        report["roa_level"] = roa.level
    _write_json(out / "report.json", report)
    if cfg["plots"] and res.tess.dim == 2:
        (out / "tessellation.svg").write_text(svg.tessellation_svg(res.tess, None if ds is None else ds.X), encoding="utf-8")
        if res.lyapunov is not None:
            lv = res.lyapunov.vertex_values()
            levels = np.linspace(lv.min(), lv.max(), 12)[1:-1]
            (out / "levels.svg").write_text(svg.level_sets_svg(res.lyapunov, levels), encoding="utf-8")
        if roa is not None:
            (out / "roa.svg").write_text(svg.roa_svg(roa), encoding="utf-8")
        oracle_name = (cfg.get("verify") or {}).get("oracle") or (cfg.get("oracle") or {}).get("name")
        if roa is not None and res.certified and oracle_name:
            resolution = int((cfg.get("verify") or {}).get("resolution", 200))
            grid = grid_negativity(res.lyapunov, roa, get_oracle(oracle_name), resolution)
            X, vals = grid.extra.get("_grid", (np.zeros((0, 2)), np.zeros(0)))
            (out / "grid.csv").write_text(grid_csv(grid), encoding="utf-8")
            (out / "heat.svg").write_text(svg.heat_svg(res.tess, X, vals, resolution), encoding="utf-8")
    return roa


def _public_config(cfg):
    return {k: v for k, v in cfg.items() if k != "output"}


def cmd_check_covering(args) -> int:
    cfg = load_config(args)
    region, prior = _regions(cfg)
    ds, info = build_dataset(cfg)
    opts = _options(cfg)
    out = Path(cfg["output"])
    try:
        tess, cov, dropped = covered_tessellation(region, prior, ds, opts)
        diag = {"passed": True, "covering": cov.to_dict(), "dropped_seeds": dropped, "dataset": info}
        diag["relevance"] = relevance_sets(ds, tess).to_dict()
        code = EXIT_OK
    except CoveringFailed as exc:
        diag = {"passed": False, "uncovered": [int(i) for i in exc.uncovered], "message": str(exc), "dataset": info}
        code = EXIT_CERT
    _write_json(out / "covering.json", diag)
    print(json.dumps(diag, sort_keys=True))
    return code


def cmd_learn(args, force_mode=None) -> int:
    cfg = load_config(args)
    if force_mode:
        cfg["mode"] = force_mode
    region, prior = _regions(cfg)
    ds, info = build_dataset(cfg)
    opts = _options(cfg)
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg["oracle"] is not None:
        save_dataset(ds, out / "dataset.csv")
    t0 = time.perf_counter()
    pcfg = _program_config(cfg)
    try:
        if pcfg.mode == NO_BOUNDARY:
            res = algorithm3_learn_roa(region, prior, ds, pcfg, cfg["budget"], opts)
        else:
            res = algorithm1_learn(region, prior, ds, pcfg, cfg["budget"], opts)
    except CoveringFailed as exc:
        cert = Certificate.covering_failed(exc.uncovered, pcfg.mode, {"M": ds.M}, [str(exc)])
        _write_json(out / "certificate.json", cert.to_dict())
        _write_json(out / "report.json", {"dataset": info, "config": _public_config(cfg), "status": COVERING_FAILED, "notes": [str(exc)]})
        _log(f"covering failed: {exc}")
        return EXIT_COVER
    except EmptyRoa as exc:
        _write_json(out / "report.json", {"dataset": info, "config": _public_config(cfg), "status": "EmptyRoa", "notes": [str(exc)]})
        _log(f"empty region of attraction: {exc}")
        return EXIT_CERT
    _emit_learn_artifacts(out, res, info, cfg, ds)
    _log(f"{res.certificate.status}: slack sum {res.certificate.slack_sum:.9g} target {res.certificate.target:.9g} ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK if res.certified else EXIT_CERT


def cmd_sequential(args) -> int:
    cfg = load_config(args)
    if not cfg["regions"]:
        raise ConfigError("sequential needs a non-empty 'regions' list")
    regions = [parse_polytope(r) for r in cfg["regions"]]
    prior = parse_polytope(cfg["prior"])
    if cfg["region"] is None:
        cfg["region"] = cfg["regions"][-1]
    chain = ([prior] if prior is not None else []) + regions
    for inner, outer in zip(chain[:-1], chain[1:]):
        if not outer.contains_polytope(inner):
            raise ConfigError("region sequence is not nested")
    ds, info = build_dataset(cfg)
    opts = _options(cfg)
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg["oracle"] is not None:
        save_dataset(ds, out / "dataset.csv")
    t0 = time.perf_counter()
    try:
        seq = algorithm2_sequential(regions, prior, ds, _program_config(cfg), cfg["budget"], opts, cfg["final_mode"])
    except StageFailed as exc:
        _write_json(out / "report.json", {"dataset": info, "config": _public_config(cfg), "status": "StageFailed", "stage": exc.stage, "reason": exc.reason})
        _log(f"stage {exc.stage} failed: {exc.reason}")
        return EXIT_STAGE
    for i, st in enumerate(seq.stages, start=1):
        _emit_learn_artifacts(out / f"stage{i}", st, info, cfg)
    _write_json(out / "certificate.json", seq.certificate.to_dict())
    _write_json(out / "lyapunov.json", seq.lyapunov.to_dict())
    report = {"dataset": info, "config": _public_config(cfg), "status": seq.certificate.status, "stages": len(seq.stages)}
    if seq.roa is not None:
        roa = roa_at_level(seq.lyapunov, seq.roa.level)
        _write_json(out / "roa.json", roa.to_dict())
        report["roa_level"] = roa.level
        if cfg["plots"] and seq.lyapunov.tess.dim == 2:
            (out / "roa.svg").write_text(svg.roa_svg(roa), encoding="utf-8")
    _write_json(out / "report.json", report)
    _log(f"{seq.certificate.status} after {len(seq.stages)} stages ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK if seq.certified else EXIT_CERT


def cmd_verify(args) -> int:
    cfg = {"verify": {}}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg.update(json.load(fh))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    vcfg = dict(cfg.get("verify") or {})
    for key in ("resolution", "n_trajectories", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            vcfg[key] = val
    try:
        L = PwaLyapunov.loads(Path(args.lyapunov).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read {args.lyapunov}: {exc}") from None
    oracle_name = args.oracle or vcfg.get("oracle") or (cfg.get("oracle") or {}).get("name")
    if not oracle_name:
        raise ConfigError("verify needs an oracle name")
    oracle = get_oracle(oracle_name)
    roa_path = Path(args.roa) if args.roa else Path(args.lyapunov).with_name("roa.json")
    if roa_path.exists():
        roa = roa_at_level(L, json.loads(roa_path.read_text(encoding="utf-8"))["level"])
    else:
        roa = extract_roa(L)
    res = int(vcfg.get("resolution", 200))
    grid = grid_negativity(L, roa, oracle, res)
    traj = roa_soundness(
        L,
        roa,
        oracle,
        int(vcfg.get("n_trajectories", 200)),
        int(vcfg.get("seed", 0)),
        float(vcfg.get("dt", 0.01)),
        float(vcfg.get("t_max", 50.0)),
        float(vcfg.get("ball_radius", 0.05)),
    )
    report = grid.to_dict()
    report.pop("_grid", None)
    report["trajectories"] = traj.to_dict()["trajectories"]
    report["escaped_starts"] = traj.escaped_starts
    report["diagnosis"] = traj.diagnosis
    report["probe_lipschitz"] = traj.extra["probe_lipschitz"]
    report["M"] = traj.extra["M"]
    report["oracle"] = oracle.name
    passed = grid.grid_points > 0 and grid.grid_max < 0 and traj.trajectories.get("Escaped", 0) == 0
    report["passed"] = passed
    out = Path(args.output) if args.output else Path(args.lyapunov).parent
    _write_json(out / "verification.json", report)
    (out / "grid.csv").write_text(grid_csv(grid), encoding="utf-8")
    if L.tess.dim == 2:
        X, vals = grid.extra.get("_grid", (np.zeros((0, 2)), np.zeros(0)))
        (out / "grid.svg").write_text(svg.heat_svg(L.tess, X, vals, res), encoding="utf-8")
    print(json.dumps({k: report[k] for k in ("grid_max", "grid_points", "trajectories", "passed")}, sort_keys=True))
    return EXIT_OK if passed else EXIT_CERT


def cmd_export_problem(args) -> int:
    cfg = load_config(args)
    region, prior = _regions(cfg)
    ds, _ = build_dataset(cfg)
    opts = _options(cfg)
    try:
        tess, _, _ = covered_tessellation(region, prior, ds, opts)
    except CoveringFailed as exc:
        _log(f"covering failed: {exc}")
        return EXIT_COVER
    prog = assemble(tess, ds, relevance_sets(ds, tess), _program_config(cfg))
    out = Path(args.problem) if args.problem else Path(cfg["output"]) / "problem.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_problem(prog, out)
    print(str(out))
    return EXIT_OK


def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output", help="output directory")
    p.add_argument("--dataset", help="CSV with header x1..xn,f1..fn")
    p.add_argument("--oracle", help='oracle fixture as JSON, e.g. \'{"name": "vdp", "n": 400, "seed": 0}\'')
    p.add_argument("--region", help='region polytope as JSON, e.g. \'{"box": [[-1,-1],[1,1]]}\'')
    p.add_argument("--prior", help='prior polytope as JSON, e.g. \'{"point": [0,0]}\'')
    p.add_argument("--M", type=float, help="Lipschitz overestimate")
    p.add_argument("--M-scale", dest="M_scale", type=float, help="multiplier applied to M")
    p.add_argument("--noise-eta", dest="noise_eta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--mode", choices=[WITH_BOUNDARY, NO_BOUNDARY])
    p.add_argument("--n-seeds", dest="n_seeds", type=int)
    p.add_argument("--rng-seed", dest="rng_seed", type=int)
    p.add_argument("--budget", type=int, help="refinement rounds")
    p.add_argument("--solver", help=f"'builtin' or 'external' (command template from {ENV_VAR})")
    p.add_argument("--solver-settings", dest="solver_settings", help="JSON object of solver settings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datalyap", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hlp in [
        ("check-covering", "tessellate and run the covering test"),
        ("learn", "learn a Lyapunov function on the region"),
        ("learn-roa", "learn without the boundary condition and extract a sublevel set"),
        ("export-problem", "write the conic program as JSON"),
    ]:
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
        if name == "export-problem":
            p.add_argument("--problem", help="problem JSON path")
    p = sub.add_parser("sequential", help="learn over a nested sequence of regions")
    _add_common(p)
    p.add_argument("--regions", help="JSON list of polytopes, innermost first")
    p.add_argument("--final-mode", dest="final_mode", choices=[WITH_BOUNDARY, NO_BOUNDARY])
    p = sub.add_parser("verify", help="check a learnt function against oracle dynamics")
    p.add_argument("lyapunov", help="lyapunov.json")
    p.add_argument("--oracle", help="oracle name")
    p.add_argument("--roa", help="roa.json (defaults to the one next to lyapunov.json)")
    p.add_argument("--config", help="JSON config with a 'verify' block")
    p.add_argument("--resolution", type=int)
    p.add_argument("--n-trajectories", dest="n_trajectories", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "check-covering": cmd_check_covering,
        "learn": cmd_learn,
        "learn-roa": lambda a: cmd_learn(a, NO_BOUNDARY),
        "sequential": cmd_sequential,
        "verify": cmd_verify,
        "export-problem": cmd_export_problem,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, DatalyapError, OSError, ValueError, KeyError) as exc:
        _log(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
