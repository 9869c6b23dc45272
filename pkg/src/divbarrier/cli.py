"""Batch front door: solve / verify / sweep / payoff subcommands.

Configuration is a single JSON file with nested sections (schema below);
every output file embeds the config hash and package version so reruns
are attributable.  Exit codes: 0 success, 1 config error, 2 numerical
termination, 3 verification failure.

Config schema (schema_version 1)::

    {
      "schema_version": 1,
      "model": {"mu": .., "sigma": .., "delta": .., "gamma": ..}
            or {"lambda1": .., "lambda2": .., "lambda3": .., "lambda4": ..,
                "sigma": ..},
      "rho": ..,  "q": ..,  "m_bar": <number or "inf">,
      "solver": {"step": 1e-4, "det_floor": 1e-10, "diag_tol": 1e-6},
      "sim": {"n_paths": .., "T": .., "dt": 1e-4, "seed": 0,
              "block_size": 4096},
      "sweep": {"parameter": "rho" | "q", "values": [..]},
      "points": [[x, m], ..],
      "output": {"dir": ".."}
    }

All sections except "model", "rho", "q", "m_bar" are optional.  The
environment variable DIVBARRIER_OUT supplies a default output directory;
--out beats it, and both beat output.dir in the config.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from ._version import __version__
from .boundary import (BoundarySolution, check_boundary_conditions,
                       integrate_boundary)
from .errors import (ConfigError, DivBarrierError, InvalidInitial, OutOfDomain,
                     SingularSystem)
from .model import LambdaQuad, ModelParams
from .montecarlo import estimate_payoff, z_score
from .surface import ValueSurface, verify_hjb

SCHEMA_VERSION = 1
ENV_OUT = "DIVBARRIER_OUT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3

_TOP_KEYS = {"schema_version", "model", "rho", "q", "m_bar",
             "solver", "sim", "sweep", "points", "output"}
_MODEL_DIRECT = {"mu", "sigma", "delta", "gamma"}
_MODEL_LAMBDA = {"lambda1", "lambda2", "lambda3", "lambda4", "sigma"}
_SOLVER_DEFAULTS = {"step": 1e-4, "det_floor": 1e-10, "diag_tol": 1e-6}
_SIM_DEFAULTS = {"n_paths": 10000, "T": None, "dt": 1e-4, "seed": 0,
                 "block_size": 4096}

# residual names a verify run asserts, with their gate levels
BOUNDARY_GATES = {"deriv_12": 1e-5, "deriv_34": 1e-5,
                  "fit_first": 1e-6, "fit_second": 1e-6,
                  "zero_sum_12": 1e-8, "zero_sum_34": 1e-8}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("<file>", f"no such config file: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("<json>", f"line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(raw, dict):
        raise ConfigError("<top>", "top level must be an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level field")
    sv = raw.get("schema_version")
    if sv != SCHEMA_VERSION:
        raise ConfigError("schema_version",
                          f"expected {SCHEMA_VERSION}, got {sv!r}")
    return raw


def _number(cfg: dict, field: str, default=None, positive=False):
    if field not in cfg:
        if default is not None or field in ("T",):
            return default
        raise ConfigError(field, "missing required field")
    v = cfg[field]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(field, f"expected a number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(field, f"must be > 0, got {v!r}")
    return float(v)


def parse_m_bar(raw) -> float:
    if raw == "inf":
        return math.inf
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError("m_bar", f'expected a number or "inf", got {raw!r}')
    return float(raw)


def build_params(cfg: dict) -> ModelParams:
    model = cfg.get("model")
    if not isinstance(model, dict):
        raise ConfigError("model", "missing or not an object")
    keys = set(model)
    rho = _number(cfg, "rho")
    q = _number(cfg, "q")
    m_bar = parse_m_bar(cfg.get("m_bar", "missing"))
    try:
        if keys == _MODEL_DIRECT:
            return ModelParams(mu=float(model["mu"]), sigma=float(model["sigma"]),
                               delta=float(model["delta"]),
                               gamma=float(model["gamma"]),
                               rho=rho, q=q, m_bar=m_bar)
        if keys == _MODEL_LAMBDA:
            lam = LambdaQuad(float(model["lambda1"]), float(model["lambda2"]),
                             float(model["lambda3"]), float(model["lambda4"]))
            return ModelParams.from_lambda(lam, sigma=float(model["sigma"]),
                                           rho=rho, q=q, m_bar=m_bar)
    except ConfigError:
        raise
    except (ValueError, DivBarrierError) as e:
        raise ConfigError("model", str(e))
    raise ConfigError(
        "model", "expected exactly the fields (mu, sigma, delta, gamma) "
        f"or (lambda1..lambda4, sigma); got {sorted(keys)}")


def _section(cfg: dict, name: str, defaults: dict) -> dict:
    block = cfg.get(name, {})
    if not isinstance(block, dict):
        raise ConfigError(name, "must be an object")
    unknown = set(block) - set(defaults)
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", "unknown field")
    out = dict(defaults)
    out.update(block)
    for key in ("step", "det_floor", "diag_tol", "dt"):
        if key in out and (isinstance(out[key], bool)
                           or not isinstance(out[key], (int, float))
                           or not out[key] > 0):
            raise ConfigError(f"{name}.{key}", f"must be > 0, got {out[key]!r}")
    if name == "sim":
        if (isinstance(out["n_paths"], bool)
                or not isinstance(out["n_paths"], int) or out["n_paths"] < 1):
            raise ConfigError("sim.n_paths", "must be an integer >= 1")
    return out


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def resolve_out_dir(args, cfg: dict) -> str:
    out = args.out or os.environ.get(ENV_OUT)
    if out is None:
        block = cfg.get("output", {})
        if isinstance(block, dict):
            out = block.get("dir")
    out = out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _solve_from_config(cfg: dict):
    params = build_params(cfg)
    solver = _section(cfg, "solver", _SOLVER_DEFAULTS)
    sol = integrate_boundary(params, step=solver["step"],
                             det_floor=solver["det_floor"],
                             diag_tol=solver["diag_tol"])
    return params, sol


def cmd_solve(cfg: dict, out_dir: str) -> int:
    """Write boundary.csv and boundary.json; exit 2 on singular cut-off."""
    chash = config_hash(cfg)
    csv_path = os.path.join(out_dir, "boundary.csv")
    json_path = os.path.join(out_dir, "boundary.json")
    try:
        _, sol = _solve_from_config(cfg)
    except SingularSystem as e:
        partial: Optional[BoundarySolution] = getattr(e, "partial", None)
        if partial is not None:
            partial.write_csv(csv_path, chash, __version__)
            with open(csv_path, "a") as fh:
                fh.write(f"# truncated=singular m={e.m:.17g} det={e.det:.17g}\n")
            partial.write_json_header(json_path, chash, __version__)
        print(f"singular system at m={e.m:.6g} (det={e.det:.3g}); "
              f"partial boundary written", file=sys.stderr)
        return EXIT_NUMERICAL
    sol.write_csv(csv_path, chash, __version__)
    sol.write_json_header(json_path, chash, __version__)
    print(f"b0={sol.b0:.12g} m_star={sol.m_star:.12g} -> {csv_path}")
    return EXIT_OK


def cmd_verify(cfg: dict, out_dir: str, a3_offset: float = 0.0) -> int:
    """Boundary-condition + variational checks; exit 3 on any failure."""
    chash = config_hash(cfg)
    try:
        params, sol = _solve_from_config(cfg)
    except SingularSystem as e:
        print(f"singular system at m={e.m:.6g}; nothing to verify",
              file=sys.stderr)
        return EXIT_NUMERICAL
    surf = ValueSurface(sol=sol, params=params)
    brep = check_boundary_conditions(sol)
    hrep = verify_hjb(surf, a3_offset=a3_offset)

    failed = [name for name, tol in BOUNDARY_GATES.items()
              if not getattr(brep, name) <= tol]
    hd = hrep.as_dict()
    for name, tol in (("pde_interior", hrep.tol_pde),
                      ("gradient_action", hrep.tol_gradient),
                      ("generator_max", hrep.tol_generator),
                      ("generator_mismatch", hrep.tol_generator_mismatch),
                      ("neumann", hrep.tol_neumann),
                      ("corner", hrep.tol_corner)):
        if not hd[name] <= tol:
            failed.append(name)
    if not hrep.U_min >= -hrep.tol_U:
        failed.append("U_min")

    report = {
        "boundary": brep.as_dict(), "hjb": hd,
        "failed": failed, "passed": not failed,
        "config_hash": chash, "version": __version__,
    }
    with open(os.path.join(out_dir, "verify.json"), "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    surf.write_heatmap_csv(os.path.join(out_dir, "u_grid.csv"),
                           config_hash=chash, version=__version__)
    if failed:
        print("verification FAILED: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    print(f"verification passed -> {os.path.join(out_dir, 'verify.json')}")
    return EXIT_OK


def cmd_sweep(cfg: dict, out_dir: str) -> int:
    """One boundary per swept value, stacked CSV + monotonicity summary."""
    chash = config_hash(cfg)
    sweep = cfg.get("sweep")
    if not isinstance(sweep, dict):
        raise ConfigError("sweep", "missing or not an object")
    param = sweep.get("parameter")
    if param not in ("rho", "q"):
        raise ConfigError("sweep.parameter", f"must be 'rho' or 'q', got {param!r}")
    values = sweep.get("values")
    if (not isinstance(values, list) or not values
            or any(isinstance(v, bool) or not isinstance(v, (int, float))
                   or not math.isfinite(v) for v in values)):
        raise ConfigError("sweep.values", "need a list of finite numbers")
    if sorted(values) != list(values):
        raise ConfigError("sweep.values", "values must be sorted ascending")

    solved, errors = [], []
    for v in values:
        sub = dict(cfg)
        sub[param] = float(v)
        try:
            _, sol = _solve_from_config(sub)
            solved.append((float(v), sol))
        except (DivBarrierError, ValueError) as e:
            errors.append({"value": float(v), "error": f"{type(e).__name__}: {e}"})

    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w") as fh:
        fh.write(f"# version={__version__} config_hash={chash}\n")
        fh.write(f"{param},m,b,F\n")
        for v, sol in solved:
            for row in zip(sol.m_grid, sol.b, sol.F):
                fh.write(f"{v:.17g}," + ",".join(f"{u:.17g}" for u in row) + "\n")

    if len(solved) == 1:
        # a one-value sweep degenerates to a solve: emit the solve outputs too
        solved[0][1].write_csv(os.path.join(out_dir, "boundary.csv"),
                               chash, __version__)
        solved[0][1].write_json_header(os.path.join(out_dir, "boundary.json"),
                                       chash, __version__)

    summary = {"parameter": param, "values": [v for v, _ in solved],
               "errors": errors, "config_hash": chash, "version": __version__,
               "b0": {f"{v:.17g}": sol.b0 for v, sol in solved},
               "m_star": {f"{v:.17g}": sol.m_star for v, sol in solved}}
    if len(solved) >= 2:
        m_hi = min(sol.m_star for _, sol in solved)
        grid = np.linspace(0.0, m_hi, 200)
        curves = [sol.b_of(grid) for _, sol in solved]
        pairs = []
        for (v0, _), (v1, _), c0, c1 in zip(solved, solved[1:],
                                            curves, curves[1:]):
            d = c1 - c0
            pairs.append({
                "from": v0, "to": v1,
                "min_diff": float(np.min(d)), "max_diff": float(np.max(d)),
                "nondecreasing": bool(np.all(d >= -1e-10)),
                "nonincreasing": bool(np.all(d <= 1e-10)),
            })
        summary["pairwise"] = pairs
        expect = "nondecreasing" if param == "rho" else "nonincreasing"
        summary["expected_direction"] = expect
        summary["monotone"] = all(p[expect] for p in pairs)
    with open(os.path.join(out_dir, "sweep.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"swept {param} over {len(solved)}/{len(values)} values -> {csv_path}")
    return EXIT_NUMERICAL if errors else EXIT_OK


def _read_points(path: str):
    pts = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if parts[:2] == ["x", "m"]:
                continue
            if len(parts) < 2:
                raise ConfigError("points", f"line {ln}: need two columns x,m")
            try:
                pts.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ConfigError("points", f"line {ln}: not numeric: {line!r}")
    if not pts:
        raise ConfigError("points", "no evaluation points found")
    return pts


def cmd_payoff(cfg: dict, out_dir: str, points_path: Optional[str] = None,
               seed: Optional[int] = None, threads: int = 1) -> int:
    """Monte Carlo vs closed form per point; exit 3 if any |z| > 3."""
    chash = config_hash(cfg)
    params, sol = _solve_from_config(cfg)
    surf = ValueSurface(sol=sol, params=params)
    sim = _section(cfg, "sim", _SIM_DEFAULTS)
    if seed is not None:
        sim["seed"] = seed
    if points_path is not None:
        points = _read_points(points_path)
    else:
        raw = cfg.get("points")
        if (not isinstance(raw, list) or not raw
                or any(not isinstance(p, list) or len(p) != 2 for p in raw)):
            raise ConfigError("points", "need [[x, m], ..] or --points FILE")
        points = [(float(p[0]), float(p[1])) for p in raw]

    n_blocks_per = ((sim["n_paths"] + sim["block_size"] - 1)
                    // sim["block_size"])
    rows, any_fail = [], False
    for i, (x, m) in enumerate(points):
        row = {"x": x, "m": m}
        try:
            ref = surf.eval_V(x, m)
            est = estimate_payoff(surf, x, m, n_paths=sim["n_paths"],
                                  T=sim["T"], dt=sim["dt"], seed=sim["seed"],
                                  block_size=sim["block_size"], threads=threads,
                                  config_hash=chash,
                                  stream_offset=i * n_blocks_per)
        except (OutOfDomain, InvalidInitial) as e:
            row["error"] = f"{type(e).__name__}: {e}"
            rows.append(row)
            continue
        row.update(estimate=est.mean, std_err=est.std_err,
                   n_paths=est.n_paths, reference=ref)
        if est.std_err == 0.0:
            exact = abs(est.mean - ref) <= 1e-9
            row["status"] = "exact-match" if exact else "degenerate-mismatch"
            row["z"] = None
            any_fail |= not exact
        else:
            z = z_score(est, ref)
            row["z"] = z
            row["status"] = "ok" if abs(z) <= 3.0 else "z-exceeded"
            any_fail |= abs(z) > 3.0
        rows.append(row)

    out = {"rows": rows, "seed": sim["seed"], "n_paths": sim["n_paths"],
           "dt": sim["dt"], "config_hash": chash, "version": __version__}
    path = os.path.join(out_dir, "payoff.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    for row in rows:
        if "error" in row:
            print(f"({row['x']:g},{row['m']:g}) error: {row['error']}",
                  file=sys.stderr)
        else:
            ztxt = "n/a" if row["z"] is None else f"{row['z']:+.2f}"
            print(f"({row['x']:g},{row['m']:g}) est={row['estimate']:.6g} "
                  f"ref={row['reference']:.6g} z={ztxt} [{row['status']}]")
    return EXIT_VERIFY if any_fail else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to JSON config")
    common.add_argument("--out", default=None, help="output directory "
                        f"(default: ${ENV_OUT} or output.dir or '.')")
    common.add_argument("--seed", type=int, default=None,
                        help="override sim.seed from the config")
    common.add_argument("--threads", type=int, default=1)
    ap = argparse.ArgumentParser(
        prog="divbarrier",
        description="Equilibrium dividend barrier: solve, verify, sweep, payoff.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common],
                   help="integrate the boundary system")
    pv = sub.add_parser("verify", parents=[common],
                        help="run residual checks on the surface")
    pv.add_argument("--inject-a3", type=float, default=0.0,
                    help=argparse.SUPPRESS)  # negative-control hook
    sub.add_parser("sweep", parents=[common],
                   help="comparative statics over rho or q")
    pp = sub.add_parser("payoff", parents=[common],
                        help="Monte Carlo vs closed form")
    pp.add_argument("--points", default=None, help="CSV of x,m rows")
    return ap


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.setdefault("sim", {})
            if not isinstance(cfg["sim"], dict):
                raise ConfigError("sim", "must be an object")
            cfg["sim"]["seed"] = args.seed
        out_dir = resolve_out_dir(args, cfg)
        if args.command == "solve":
            return cmd_solve(cfg, out_dir)
        if args.command == "verify":
            return cmd_verify(cfg, out_dir, a3_offset=args.inject_a3)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir)
        if args.command == "payoff":
            return cmd_payoff(cfg, out_dir, points_path=args.points,
                              seed=args.seed, threads=args.threads)
        raise AssertionError(args.command)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularSystem as e:
        print(f"singular system at m={e.m:.6g}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DivBarrierError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
