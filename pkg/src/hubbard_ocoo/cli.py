"""Command-line interface: single-point runs and configured potential sweeps.

Exit codes: 0 when every requested method converged, 2 when some did not
(results are still written), 1 for usage, config or I/O errors.

Sweep config files are TOML with the sections below; every key is optional
except ``sweep.kind`` and ``sweep.u_over_t``::

    [sweep]      kind, u_over_t, t, methods, seed, warm_start, spin, spin_penalty
    [grid]       start, stop, step          (mu/t, inclusive)
    [ocoo]       shift, lambda_penalty, cf_tol   (units of t)
    [optimizer]  max_iters, restarts, perturbation, fd_step, energy_tol, grad_tol
    [output]     csv, json                  (relative to the working directory)
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
from dataclasses import asdict, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .cas import DEFAULT_SPIN_PENALTY
from .errors import ParameterError
from .model import HubbardParams
from .ocoo import OcooSettings, write_cf_trace
from .optimize import OptimizerOptions
from .sweep import METHODS, SweepConfig, SweepRecord, emit, evaluate_point, run_sweep

log = logging.getLogger("hubbard_ocoo")

BUNDLED = ("figures/sym_u10", "figures/asym_u10", "figures/sym_u5", "figures/asym_u5")

_DEFAULT_GRID = {"symmetric": (0.0, 12.0), "antisymmetric": (-12.0, 12.0)}
_SCHEMA = {
    "sweep": {
        "kind": str,
        "u_over_t": float,
        "t": float,
        "methods": list,
        "seed": int,
        "warm_start": bool,
        "spin": str,
        "spin_penalty": float,
    },
    "grid": {"start": float, "stop": float, "step": float},
    "ocoo": {"shift": float, "lambda_penalty": float, "cf_tol": float},
    "optimizer": {
        "max_iters": int,
        "restarts": int,
        "perturbation": float,
        "fd_step": float,
        "energy_tol": float,
        "grad_tol": float,
    },
    "output": {"csv": str, "json": str},
}


class UsageError(Exception):
    pass


class ConfigError(UsageError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _check_type(where: str, value, kind):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if (kind is int and isinstance(value, bool)) or not isinstance(value, kind):
        raise ConfigError(f"{where}: expected {kind.__name__}, got {type(value).__name__} {value!r}")
    return value


def resolve_config_path(name: str) -> Path:
    """A file path, or one of the bundled names such as ``figures/sym_u10``."""
    path = Path(name)
    if path.is_file():
        return path
    stem = name[:-5] if name.endswith(".toml") else name
    if stem in BUNDLED:
        return Path(str(resources.files("hubbard_ocoo") / "configs" / f"{stem}.toml"))
    raise ConfigError(f"config {name!r} not found (bundled: {', '.join(BUNDLED)})")


def read_config(name: str) -> dict:
    """Parse and type-check a config file into ``{section: {key: value}}``."""
    path = resolve_config_path(name)
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out = {}
    for section, body in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"{path}: [{section}] must be a table")
        out[section] = {}
        for key, value in body.items():
            where = f"{path}: [{section}].{key}"
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key [{section}].{key}")
            out[section][key] = _check_type(where, value, _SCHEMA[section][key])
    return out


def build_config(raw: dict) -> SweepConfig:
    sw = raw.get("sweep", {})
    for key in ("kind", "u_over_t"):
        if key not in sw:
            raise ConfigError(f"missing required key [sweep].{key}")
    kind = sw["kind"]
    lo, hi = _DEFAULT_GRID.get(kind, (0.0, 12.0))
    grid = {"start": lo, "stop": hi, "step": 0.25, **raw.get("grid", {})}
    output = raw.get("output", {})
    try:
        options = OptimizerOptions(seed=sw.get("seed", 0), **raw.get("optimizer", {}))
        settings = OcooSettings(optimizer=options, **raw.get("ocoo", {}))
        return SweepConfig(
            kind=kind,
            u_over_t=sw["u_over_t"],
            mu_start=grid["start"],
            mu_stop=grid["stop"],
            mu_step=grid["step"],
            methods=tuple(sw.get("methods", METHODS)),
            t=sw.get("t", 1.0),
            spin=sw.get("spin", "singlet"),
            spin_penalty=sw.get("spin_penalty", DEFAULT_SPIN_PENALTY),
            warm_start=sw.get("warm_start", True),
            seed=sw.get("seed", 0),
            ocoo=settings,
            csv_path=output.get("csv"),
            json_path=output.get("json"),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def _methods(text: str) -> tuple[str, ...]:
    items = tuple(m.strip() for m in text.split(",") if m.strip())
    if not items:
        raise argparse.ArgumentTypeError("at least one method is required")
    bad = [m for m in items if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {','.join(METHODS)}")
    return items


def _add_settings(p: argparse.ArgumentParser, defaults: bool) -> None:
    """Method and settings overrides shared by both subcommands."""
    d = OcooSettings()
    o = d.optimizer

    def default(value):
        return value if defaults else None

    g = p.add_argument_group("methods and settings")
    g.add_argument("--methods", type=_methods, default=default(METHODS),
                   help=f"comma-separated subset of {','.join(METHODS)} (default: all)")
    g.add_argument("--spin", choices=("singlet", "any"), default=default("singlet"),
                   help="target spin of the reported states (default: singlet)")
    g.add_argument("--spin-penalty", type=float, default=default(DEFAULT_SPIN_PENALTY),
                   help=f"S^2 penalty weight in units of t for singlet targeting (default: {DEFAULT_SPIN_PENALTY:g})")
    g.add_argument("--shift", type=float, default=default(d.shift),
                   help=f"OCOO level shift / t (default: {d.shift:g})")
    g.add_argument("--lambda", dest="lambda_penalty", type=float, default=default(d.lambda_penalty),
                   help=f"OCOO overlap penalty / t (default: {d.lambda_penalty:g})")
    g.add_argument("--cf-tol", type=float, default=default(d.cf_tol),
                   help=f"OCOO cost-function change threshold / t (default: {d.cf_tol:g})")
    g.add_argument("--restarts", type=int, default=default(o.restarts),
                   help=f"random restarts per optimization (default: {o.restarts})")
    g.add_argument("--perturbation", type=float, default=default(o.perturbation),
                   help=f"restart perturbation scale in rad (default: {o.perturbation:g})")
    g.add_argument("--max-iters", type=int, default=default(o.max_iters),
                   help=f"iterations per local run (default: {o.max_iters})")
    g.add_argument("--fd-step", type=float, default=default(o.fd_step),
                   help=f"finite-difference step (default: {o.fd_step:g})")
    g.add_argument("--energy-tol", type=float, default=default(o.energy_tol),
                   help=f"objective change tolerance / t (default: {o.energy_tol:g})")
    g.add_argument("--grad-tol", type=float, default=default(o.grad_tol),
                   help=f"gradient norm tolerance (default: {o.grad_tol:g})")
    g.add_argument("--seed", type=int, default=default(o.seed), help=f"random seed (default: {o.seed})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hubbard-ocoo",
        description="FCI, CASSCF, SA-CASSCF and OCOO for the four-electron Hubbard trimer. "
        "Energies are in units of t.",
        epilog="exit codes: 0 converged, 2 partially converged, 1 usage or I/O error",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("point", help="run the methods at one parameter point")
    p.add_argument("--kind", required=True, choices=("symmetric", "antisymmetric"),
                   help="symmetric: potential mu on the central site; antisymmetric: +mu, 0, -mu")
    p.add_argument("--u", type=float, required=True, help="on-site repulsion U")
    p.add_argument("--mu", type=float, required=True, help="site potential mu")
    p.add_argument("--t", type=float, default=1.0, help="hopping t (default: 1)")
    p.add_argument("--json", metavar="PATH", help="also write the record as JSON")
    p.add_argument("--cf-trace", metavar="PATH", help="write the OCOO cost-function trace as CSV")
    _add_settings(p, defaults=True)

    s = sub.add_parser("sweep", help="run a configured mu sweep",
                       description=__doc__.split("\n\n", 2)[2],
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--config", required=True,
                   help=f"TOML config file or bundled name ({', '.join(BUNDLED)})")
    s.add_argument("--kind", choices=("symmetric", "antisymmetric"), help="override [sweep].kind")
    s.add_argument("--u-over-t", type=float, help="override [sweep].u_over_t")
    s.add_argument("--mu-start", type=float, help="override [grid].start")
    s.add_argument("--mu-stop", type=float, help="override [grid].stop")
    s.add_argument("--mu-step", type=float, help="override [grid].step")
    s.add_argument("--csv", metavar="PATH", help="override [output].csv")
    s.add_argument("--json", metavar="PATH", help="override [output].json")
    s.add_argument("--no-warm-start", action="store_true", help="disable warm starts between grid points")
    s.add_argument("--jobs", type=int, default=1,
                   help="parallel workers; warm starts chain within contiguous blocks (default: 1)")
    _add_settings(s, defaults=False)
    return parser


def _apply_overrides(config: SweepConfig, args) -> SweepConfig:
    opt = {k: getattr(args, k) for k in
           ("max_iters", "restarts", "perturbation", "fd_step", "energy_tol", "grad_tol", "seed")
           if getattr(args, k) is not None}
    options = replace(config.optimizer, **opt)
    oc = {k: getattr(args, k) for k in ("shift", "lambda_penalty", "cf_tol") if getattr(args, k) is not None}
    settings = replace(config.ocoo, optimizer=options, **oc)
    top = {
        "kind": args.kind,
        "u_over_t": args.u_over_t,
        "mu_start": args.mu_start,
        "mu_stop": args.mu_stop,
        "mu_step": args.mu_step,
        "methods": args.methods,
        "spin": args.spin,
        "spin_penalty": args.spin_penalty,
        "seed": args.seed,
        "csv_path": args.csv,
        "json_path": args.json,
    }
    top = {k: v for k, v in top.items() if v is not None}
    if args.no_warm_start:
        top["warm_start"] = False
    return replace(config, ocoo=settings, **top)


def _record_converged(record: SweepRecord, methods) -> bool:
    flags = {"casscf": record.conv_casscf, "sa_casscf": record.conv_sa, "ocoo": record.conv_ocoo}
    needed = set(methods) | ({"casscf"} if "ocoo" in methods else set())
    return not record.error and all(flags[m] for m in needed if m in flags)


def convergence_summary(records: Sequence[SweepRecord], methods) -> dict:
    summary = {}
    for method, flag in (("casscf", "conv_casscf"), ("sa_casscf", "conv_sa"), ("ocoo", "conv_ocoo")):
        if method in methods or (method == "casscf" and "ocoo" in methods):
            n = sum(bool(getattr(r, flag)) for r in records)
            summary[method] = {"converged": n, "total": len(records)}
    summary["errors"] = sum(bool(r.error) for r in records)
    return summary


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_manifest(output: Path, config: dict, seed: int, summary: dict) -> Path:
    """Reproducibility metadata written next to ``output`` as ``<name>.manifest.json``."""
    manifest = {
        "output": output.name,
        "tool": "hubbard-ocoo",
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": seed,
        "config": _jsonable(config),
        "convergence": summary,
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    path = output.with_name(output.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return "-" if math.isnan(x) else f"{x: .10f}"
    return str(x)


def format_point(record: SweepRecord, methods) -> str:
    rows = []
    if "fci" in methods:
        rows += [("E0 FCI", record.e0_fci), ("E1 FCI", record.e1_fci), ("gap FCI", record.gap_fci)]
    if "casscf" in methods or "ocoo" in methods:
        rows += [("E0 CASSCF", record.e0_casscf), ("|<CASSCF 0|FCI 0>|", record.proj_gs),
                 ("converged CASSCF", record.conv_casscf)]
    if "ocoo" in methods:
        rows += [
            ("E1 OCOO", record.e1_ocoo),
            ("gap OCOO", record.gap_ocoo),
            ("|<CASSCF 0|OCOO 1>|", record.ocoo_overlap),
            ("B0 coefficients", "  ".join(f"{c:.6f}" for c in record.b0_coeffs)),
            ("B0 weight", record.b0_weight),
            ("converged OCOO", record.conv_ocoo),
        ]
    if "sa_casscf" in methods:
        rows += [("E0 SA-CASSCF", record.e0_sa), ("E1 SA-CASSCF", record.e1_sa),
                 ("gap SA-CASSCF", record.gap_sa), ("converged SA-CASSCF", record.conv_sa)]
    rows.append(("band / U", record.band_over_u))
    width = max(len(name) for name, _ in rows)
    lines = [f"{name:<{width}}  {_fmt(value)}" for name, value in rows]
    if record.error:
        lines.append(f"errors: {record.error}")
    return "\n".join(lines)


def cmd_point(args) -> int:
    try:
        params = HubbardParams.trimer(args.kind, args.mu, args.u, args.t)
        options = OptimizerOptions(
            max_iters=args.max_iters, restarts=args.restarts, perturbation=args.perturbation,
            seed=args.seed, fd_step=args.fd_step, energy_tol=args.energy_tol, grad_tol=args.grad_tol,
        )
        settings = OcooSettings(args.shift, args.lambda_penalty, args.cf_tol, options)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    record, _, details = evaluate_point(
        params, args.methods, settings, args.spin, args.spin_penalty, np.random.default_rng(args.seed)
    )
    print(f"{args.kind} trimer  U/t = {args.u / args.t:g}  mu/t = {args.mu / args.t:g}  (energies / t)")
    print(format_point(record, args.methods))
    summary = convergence_summary([record], args.methods)
    if args.json:
        path = Path(args.json)
        emit([record], "json", path)
        write_manifest(path, {"point": {k: v for k, v in vars(args).items() if k != "func"}},
                       args.seed, summary)
    if args.cf_trace:
        if "ocoo" not in details:
            raise UsageError("--cf-trace needs the ocoo method")
        write_cf_trace(details["ocoo"], args.cf_trace)
    return 0 if _record_converged(record, args.methods) else 2


def cmd_sweep(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    config = build_config(read_config(args.config))
    try:
        config = _apply_overrides(config, args)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    outputs = [(fmt, Path(p)) for fmt, p in (("csv", config.csv_path), ("json", config.json_path)) if p]
    if not outputs:
        raise UsageError("no output path: set [output].csv/json or pass --csv/--json")
    log.info("sweeping %d points of the %s trimer at U/t=%g", len(config.grid()), config.kind, config.u_over_t)
    records = run_sweep(config, jobs=args.jobs)
    summary = convergence_summary(records, config.methods)
    for fmt, path in outputs:
        emit(records, fmt, path)
        write_manifest(path, asdict(config), config.seed, summary)
        print(f"wrote {path}")
    ok = all(_record_converged(r, config.methods) for r in records)
    print(json.dumps(summary))
    return 0 if ok else 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return cmd_point(args) if args.command == "point" else cmd_sweep(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
