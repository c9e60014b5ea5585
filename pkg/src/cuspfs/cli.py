"""Batch front end: parse a JSON config, run the named checks, emit reports.

Usage: cuspfs <command> --config <file> --out <dir> [--seed N]

Every command validates its config against a JSON schema before any
computation (unknown keys are rejected), then dispatches to the check
registry and writes a summary JSON plus one CSV per check.  Exit status:
0 all checks pass, 1 a check failed its tolerance, 2 config error,
3 numerical failure (with a diagnostics file naming the failing node/step).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from . import checks as _checks
from .parabolic import NumericalFailure

__all__ = ["main", "run", "list_checks", "load_tolerances", "COMMANDS"]

_CHAR_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["power", "exponential", "sampled"]},
        "alpha": {"type": "number"},
        "beta": {"type": "number"},
    },
    "required": ["kind"],
}
_BASE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["circle", "arc", "points"]},
        "theta0": {"type": "number"},
        "theta1": {"type": "number"},
        "points": {"type": "array", "items": {"type": "number"}},
    },
}
_CUSP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "flavor": {"enum": ["cone", "cusp"]},
        "characteristic": _CHAR_SCHEMA,
        "base": _BASE_SCHEMA,
        "epsilon": {"type": "number"},
        "grading": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "smax": {"type": "number"},
                "ns": {"type": "integer"},
                "ntheta": {"type": "integer"},
            },
        },
    },
}
_SPEC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "k": {"type": "array", "items": {"type": "integer"}},
        "q": {"type": "array", "items": {"type": "number"}},
        "lambda": {"type": "array", "items": {"type": "number"}},
    },
}
_COMMON = {
    "seed": {"type": "integer"},
    "checks": {"type": "array", "items": {"type": "string"}},
    "tolerances": {"type": "object"},
    "cusp": _CUSP_SCHEMA,
    "cusps": {"type": "array", "items": _CUSP_SCHEMA},
}


def _schema(extra: dict, required=()):
    props = dict(_COMMON)
    props.update(extra)
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


COMMANDS: dict[str, dict] = {
    "validate-characteristic": {"schema": _schema({}), "checks": ["M.IR"]},
    "cusp-report": {
        "schema": _schema({"eps0": {"type": "number"}, "eps1": {"type": "number"}}),
        "checks": ["M.gC", "M.fg", "M.I", "M.r", "P.g"],
    },
    "localization": {
        "schema": _schema(
            {
                "atlas": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "overlap": {"type": "array", "items": {"type": "number"}},
                        "s_max": {"type": "number"},
                    },
                },
                "spec": _SPEC_SCHEMA,
            }
        ),
        "checks": ["U.LS", "F.R", "F.LC"],
    },
    "norm-equivalence": {
        "schema": _schema({"spec": _SPEC_SCHEMA}),
        "checks": ["S.NN", "W.d1", "S.ab", "W.eq.k0", "W.eq", "W.WW", "W.L", "W.W.analytic", "M.I"],
    },
    "embedding": {
        "schema": _schema({"spec": _SPEC_SCHEMA, "lam0": {"type": "number"}, "lam1": {"type": "number"}}),
        "checks": ["F.S.gn", "F.S.sobolev", "F.S.morrey", "W.Wr", "W.M"],
    },
    "multiplication": {
        "schema": _schema({"lam0": {"type": "number"}, "lam1": {"type": "number"}}),
        "checks": ["W.M"],
    },
    "solve": {
        "schema": _schema(
            {
                "solver": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "lambda": {"type": "number"},
                        "q": {"type": "number"},
                        "T": {"type": "number"},
                        "dt": {"type": "number"},
                        "scheme": {"enum": ["implicit-euler", "crank-nicolson"]},
                        "smax": {"type": "number"},
                        "ns": {"type": "integer"},
                        "ntheta": {"type": "integer"},
                    },
                    "required": ["q"],
                },
                "study": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "orders": {"type": "boolean"},
                        "heat_decay": {"type": "boolean"},
                        "conjugation": {"type": "boolean"},
                        "linearity": {"type": "boolean"},
                        "refinements": {"type": "integer", "minimum": 2},
                    },
                },
            },
            required=["solver"],
        ),
        "checks": ["D.D.orders", "D.D.decay", "D.D.conj", "D.D.linear"],
    },
    "mr-study": {
        "schema": _schema(
            {
                "study": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "lambdas": {"type": "array", "items": {"type": "number"}},
                        "qs": {"type": "array", "items": {"type": "number"}},
                        "alphas": {"type": "array", "items": {"type": "number"}},
                        "T": {"type": "number"},
                        "dt": {"type": "number"},
                        "ns": {"type": "integer"},
                        "smax": {"type": "number"},
                    },
                }
            }
        ),
        "checks": ["D.D.mr"],
    },
    "kondratiev": {
        "schema": _schema(
            {
                "domain": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "theta1": {"type": "number"},
                        "periodic": {"type": "boolean"},
                        "nr": {"type": "integer"},
                        "ntheta": {"type": "integer"},
                        "r_min": {"type": "number"},
                        "eps0": {"type": "number"},
                        "eps1": {"type": "number"},
                    },
                },
                "kondratiev": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "k": {"type": "array", "items": {"type": "integer"}},
                        "a": {"type": "number"},
                        "q": {"type": "number"},
                        "corpus_seed": {"type": "integer"},
                        "blends": {"type": "array"},
                    },
                },
            }
        ),
        "checks": ["K.K", "K.M"],
    },
}


class ConfigError(ValueError):
    pass


def load_tolerances(overrides: dict | None = None) -> dict:
    with resources.files("cuspfs.data").joinpath("tolerances.json").open() as fh:
        tol = json.load(fh)
    if overrides:
        for key in overrides:
            if key not in tol:
                raise ConfigError(f"unknown tolerance key {key!r}")
        tol.update(overrides)
    return tol


def load_csv_schema() -> dict:
    with resources.files("cuspfs.data").joinpath("csv_schema.json").open() as fh:
        return json.load(fh)


def _validate(command: str, cfg: dict) -> None:
    try:
        import jsonschema
    except ImportError:  # degrade to an unknown-key check
        allowed = set(COMMANDS[command]["schema"]["properties"])
        unknown = set(cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        for key in COMMANDS[command]["schema"].get("required", []):
            if key not in cfg:
                raise ConfigError(f"missing required key {key!r}")
        return
    try:
        jsonschema.validate(cfg, COMMANDS[command]["schema"])
    except jsonschema.ValidationError as exc:
        raise ConfigError(str(exc).splitlines()[0]) from exc


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # numpy scalars repr with a type wrapper
    return "" if v is None else str(v)


def _write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(c, "")) for c in columns) + "\n")


def _solve_checks(cfg: dict) -> list[str]:
    study = cfg.get("study", {})
    out = []
    if study.get("orders"):
        out.append("D.D.orders")
    if study.get("heat_decay"):
        out.append("D.D.decay")
    if study.get("conjugation"):
        out.append("D.D.conj")
    if study.get("linearity"):
        out.append("D.D.linear")
    return out


def _run_solve_output(cfg: dict, out_dir: str) -> None:
    """The plain IVP run of the solve command, recorded as run.csv."""
    from . import parabolic as pb

    sol = cfg["solver"]
    block = cfg.get("cusp", {"flavor": "cusp", "characteristic": {"kind": "power", "alpha": 2.0}, "base": {"kind": "points"}})
    cusp = _checks._build_cusp(block)
    geom = cusp.cylinder_geometry(sol.get("smax", 6.0), sol.get("ns", 257), sol.get("ntheta", 16))
    lam, q = sol.get("lambda", 0.0), sol["q"]
    prob, _ = _checks._mms_problem(geom, lam, q, sol.get("T", 0.1))
    traj = pb.solve_ivp(prob, sol.get("dt", 2e-3), sol.get("scheme", "implicit-euler"))
    rows = [{"t": float(t), "step_norm": sn} for t, sn in zip(traj.times, traj.step_norms)]
    _write_csv(os.path.join(out_dir, "run.csv"), load_csv_schema()["schemas"]["run"]["columns"], rows)


def run(command: str, cfg: dict, out_dir: str, seed: int | None = None) -> int:
    """Execute one command; returns the process exit status."""
    if command not in COMMANDS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return 2
    try:
        _validate(command, cfg)
        tol = load_tolerances(cfg.get("tolerances"))
        default = _solve_checks(cfg) if command == "solve" else COMMANDS[command]["checks"]
        check_ids = cfg.get("checks") or default
        if not check_ids:
            raise ConfigError("no checks selected (empty study block?)")
        allowed = set(COMMANDS[command]["checks"])
        bad = [c for c in check_ids if c not in _checks.CHECKS or c not in allowed]
        if bad:
            raise ConfigError(f"checks {bad} not available under command {command!r}")
        if "cusp" not in cfg and "cusps" not in cfg:
            cfg = dict(cfg)
            cfg["cusp"] = {"flavor": "cusp", "characteristic": {"kind": "power", "alpha": 2.0}, "base": {"kind": "points"}}
        if seed is not None:
            cfg["seed"] = seed
        cfg.setdefault("seed", 0)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    os.makedirs(out_dir, exist_ok=True)
    schemas = load_csv_schema()["schemas"]
    summary = {}
    try:
        results = _checks.run_checks(check_ids, cfg, tol)
        if command == "solve":
            _run_solve_output(cfg, out_dir)
    except NumericalFailure as exc:
        diag = {"error": str(exc), **exc.diagnostics}
        with open(os.path.join(out_dir, "diagnostics.json"), "w") as fh:
            json.dump(diag, fh, indent=2, sort_keys=True)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    for res in sorted(results, key=lambda r: r.check_id):
        summary[res.check_id] = {
            "pass": bool(res.passed),
            "value": res.value,
            "tolerance": res.tolerance,
            **({"extra": _jsonable(res.extra)} if res.extra else {}),
        }
        cols = schemas[res.schema]["columns"]
        name = "study" if res.schema == "study" else res.check_id.replace("/", "_")
        _write_csv(os.path.join(out_dir, f"{name}.csv"), cols, res.rows)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return 0 if all(v["pass"] for v in summary.values()) else 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    return obj


def list_checks() -> str:
    return "\n".join(_checks.catalog())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cuspfs", description="desk-scale checks for weighted function spaces on cuspidal manifolds")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
    sub.add_parser("list-checks")
    args = parser.parse_args(argv)
    if args.command == "list-checks":
        print(list_checks())
        return 0
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(args.command, cfg, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
